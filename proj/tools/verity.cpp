#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "verity/bot.hpp"
#include "verity/config.hpp"
#include "verity/eval.hpp"
#include "verity/http_provider.hpp"
#include "verity/ingest.hpp"
#include "verity/report.hpp"

namespace {

using namespace verity;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNonVerifiable = 3;
constexpr int kExitUnable = 4;

struct CommonFlags {
    std::string config_path;
    std::string strategy = "fewshot";
    std::string backend = "live";
    std::string cache_dir = ".verity-cache";
    std::string model_id;
    std::string template_path;
    std::string abbrev_path;
    int concurrency = 4;
    int max_steps = 5;
    std::string stamp;  // fixed created_at for reproducible outputs
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_stamp = false) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--strategy", flags.strategy, "Judgment strategy")
        ->check(CLI::IsMember({"fewshot", "agent"}));
    cmd->add_option("--backend", flags.backend, "Model backend")
        ->check(CLI::IsMember({"live", "mock", "record", "replay"}));
    cmd->add_option("--cache", flags.cache_dir, "Cache directory for record/replay");
    cmd->add_option("--model", flags.model_id, "Model id sent to the provider");
    cmd->add_option("--template", flags.template_path, "Prompt template file");
    cmd->add_option("--abbrev", flags.abbrev_path, "Extra abbreviation list file");
    cmd->add_option("--concurrency", flags.concurrency, "Concurrent judgments")
        ->check(CLI::Range(1, 64));
    cmd->add_option("--max-steps", flags.max_steps, "Agent plan cap")->check(CLI::Range(1, 20));
    if (with_stamp) cmd->add_option("--stamp", flags.stamp, "Fixed report timestamp (ISO 8601)");
}

struct Backends {
    std::shared_ptr<ModelBackend> model;
    std::shared_ptr<SearchBackend> search;
};

Backends make_backends(const CommonFlags& flags, const AppConfig& cfg) {
    Backends out;
    const auto cache_file = [&](const char* name) {
        std::filesystem::create_directories(flags.cache_dir);
        return (std::filesystem::path(flags.cache_dir) / name).string();
    };
    const auto live_model = [&] { return std::make_shared<HttpChatBackend>(cfg.provider); };
    const auto live_search = [&]() -> std::shared_ptr<SearchBackend> {
        if (!cfg.search.endpoint.empty()) return std::make_shared<HttpSearchBackend>(cfg.search);
        return make_demo_search_backend();
    };
    if (flags.backend == "mock") {
        out.model = make_demo_model_backend();
        out.search = make_demo_search_backend();
    } else if (flags.backend == "record") {
        out.model = std::make_shared<RecordReplayModel>(live_model(), cache_file("model.jsonl"),
                                                        CacheMode::Record);
        out.search = std::make_shared<RecordReplaySearch>(live_search(), cache_file("search.jsonl"),
                                                          CacheMode::Record);
    } else if (flags.backend == "replay") {
        out.model = std::make_shared<RecordReplayModel>(nullptr, cache_file("model.jsonl"),
                                                        CacheMode::Replay);
        out.search = std::make_shared<RecordReplaySearch>(nullptr, cache_file("search.jsonl"),
                                                          CacheMode::Replay);
    } else {
        out.model = live_model();
        out.search = live_search();
    }
    return out;
}

AppConfig load_config_or_die(const CommonFlags& flags) {
    AppConfig cfg = load_app_config(flags.config_path);
    if (!flags.model_id.empty()) cfg.provider.model_id = flags.model_id;
    if (!flags.template_path.empty()) cfg.template_path = flags.template_path;
    if (!flags.abbrev_path.empty()) cfg.abbreviations_path = flags.abbrev_path;
    return cfg;
}

/// Bundle override loaded once; null means the built-in default.
const PromptBundle* bundle_for(const AppConfig& cfg, PromptBundle& storage) {
    if (cfg.template_path.empty()) return nullptr;
    storage = load_bundle(cfg.template_path);
    return &storage;
}

std::string read_stream(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string read_file_or_die(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_stream(in);
}

struct Fetched {
    std::string body;
    std::string content_type;
};

/// Single GET with a 10s timeout, at most 5 redirects, 5 MB body cap.
Fetched fetch_url(std::string url) {
    for (int hop = 0; hop <= 5; ++hop) {
        const auto split = verity::detail::split_url(url);
        httplib::Client client(split.base);
        client.set_connection_timeout(std::chrono::seconds(10));
        client.set_read_timeout(std::chrono::seconds(10));
        client.set_follow_location(false);
        auto res = client.Get(split.path);
        if (!res) throw std::runtime_error("fetch failed: " + httplib::to_string(res.error()));
        if (res->status >= 300 && res->status < 400) {
            const std::string location = res->get_header_value("Location");
            if (location.empty()) throw std::runtime_error("redirect without Location header");
            url = location.rfind("http", 0) == 0 ? location : split.base + location;
            continue;
        }
        if (res->status != 200)
            throw std::runtime_error("fetch failed: HTTP " + std::to_string(res->status));
        if (res->body.size() > 5u * 1024 * 1024) throw std::runtime_error("fetch exceeds the 5 MB cap");
        return {res->body, res->get_header_value("Content-Type")};
    }
    throw std::runtime_error("too many redirects (limit 5)");
}

DocKind resolve_kind(const std::string& kind_flag, const std::string& origin, const Fetched& fetched) {
    if (!kind_flag.empty() && kind_flag != "auto") {
        const auto kind = dockind_from_slug(kind_flag);
        if (!kind) throw CLI::ValidationError("--kind", "unsupported kind: " + kind_flag);
        return *kind;
    }
    if (fetched.content_type.find("text/html") != std::string::npos) return DocKind::Html;
    if (fetched.content_type.find("text/vtt") != std::string::npos) return DocKind::Vtt;
    return infer_kind(origin, fetched.body);
}

int exit_code_for(const Verdict& v) {
    switch (v.outcome) {
        case Outcome::Judged: return kExitOk;
        case Outcome::NonVerifiable: return kExitNonVerifiable;
        case Outcome::UnableToJudge: return kExitUnable;
    }
    return kExitError;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

int run_check(const CommonFlags& flags, std::string statement, bool as_json) {
    if (statement.empty() && !::isatty(::fileno(stdin))) statement = read_stream(std::cin);
    statement = trim_copy(statement);
    if (statement.empty()) {
        std::cerr << "check: statement is empty (pass it as an argument or on stdin)\n";
        return kExitUsage;
    }
    const AppConfig cfg = load_config_or_die(flags);
    PromptBundle storage;
    const PromptBundle* bundle = bundle_for(cfg, storage);
    const Backends backends = make_backends(flags, cfg);

    Verdict verdict;
    std::vector<std::string> warnings;
    if (flags.strategy == "agent") {
        AgentOptions options;
        options.max_steps = flags.max_steps;
        options.model_id = cfg.provider.model_id;
        options.bundle = bundle;
        verdict = verify_with_agent(statement, *backends.model, *backends.search, options, &warnings)
                      .first;
    } else {
        const std::string prompt =
            bundle ? build_fewshot_prompt(statement, *bundle) : build_fewshot_prompt(statement);
        const std::string raw =
            backends.model->complete(ModelRequest::for_prompt(prompt, cfg.provider.model_id));
        verdict = parse_verdict({raw, Strategy::FewShot}, &warnings);
    }
    if (verdict.is_judged() && verdict.false_part)
        verdict.false_part->span = locate_false_part(statement, verdict.false_part->text);

    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    if (as_json) {
        std::cout << verdict_to_json(verdict).dump(2) << "\n";
    } else {
        std::cout << format_verdict_text(verdict) << "\n";
    }
    return exit_code_for(verdict);
}

int run_scan(const CommonFlags& flags, const std::string& input, const std::string& kind_flag,
             const std::string& out_dir) {
    const AppConfig cfg = load_config_or_die(flags);
    PromptBundle storage;
    const PromptBundle* bundle = bundle_for(cfg, storage);
    const Backends backends = make_backends(flags, cfg);

    Fetched fetched;
    if (input.rfind("http://", 0) == 0 || input.rfind("https://", 0) == 0) {
        fetched = fetch_url(input);
    } else {
        fetched.body = read_file_or_die(input);
    }
    const DocKind kind = resolve_kind(kind_flag, input, fetched);
    const SourceDocument doc = extract(fetched.body, kind, input);

    AssessOptions options;
    options.strategy = flags.strategy == "agent" ? Strategy::Agent : Strategy::FewShot;
    options.concurrency = flags.concurrency;
    options.model_id = cfg.provider.model_id;
    options.max_steps = flags.max_steps;
    options.created_at = flags.stamp;
    options.bundle = bundle;
    if (!cfg.abbreviations_path.empty()) {
        for (const std::string& token : load_abbreviations(cfg.abbreviations_path))
            options.segmentation.abbreviations.insert(token);
    }
    const Report report = assess_document(doc, *backends.model, backends.search.get(), options);

    std::filesystem::create_directories(out_dir);
    const std::string json_path = (std::filesystem::path(out_dir) / "report.json").string();
    const std::string html_path = (std::filesystem::path(out_dir) / "report.html").string();
    write_file(json_path, render_json(report));
    write_file(html_path, render_html(report));

    std::cout << "Global Veracity: "
              << (report.global.mean_percent ? std::to_string(*report.global.mean_percent) + "%"
                                             : "n/a")
              << "  (" << report.global.judged_count << " judged, " << report.global.excluded_count
              << " excluded)\n";
    std::cerr << "wrote " << json_path << " and " << html_path << "\n";
    return kExitOk;
}

int run_eval_cmd(const CommonFlags& flags, const std::string& dataset_path, const std::string& format,
                 const std::string& mode, const std::string& out_dir) {
    const AppConfig cfg = load_config_or_die(flags);
    PromptBundle storage;
    const PromptBundle* bundle = bundle_for(cfg, storage);
    const Backends backends = make_backends(flags, cfg);

    DatasetFormat fmt = DatasetFormat::Csv;
    if (format == "jsonl" || (format.empty() && dataset_path.size() > 6 &&
                              dataset_path.substr(dataset_path.size() - 6) == ".jsonl"))
        fmt = DatasetFormat::Jsonl;
    const Dataset dataset = load_dataset(dataset_path, fmt);
    for (const std::string& w : dataset.warnings) std::cerr << "warning: " << w << "\n";

    EvalOptions options;
    options.strategy = flags.strategy == "agent" ? Strategy::Agent : Strategy::FewShot;
    options.mode = mode == "coarse" ? MatchMode::Coarse : MatchMode::Polarity;
    options.concurrency = flags.concurrency;
    options.model_id = cfg.provider.model_id;
    options.max_steps = flags.max_steps;
    options.bundle = bundle;
    const EvalRun run = run_eval(dataset, *backends.model, backends.search.get(), options);

    std::cout << strategy_slug(options.strategy) << ": " << format_summary_row(run.summary) << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const auto dir = std::filesystem::path(out_dir);
        write_file((dir / "eval_summary.json").string(),
                   summary_to_json(run.summary, options.strategy, options.mode));
        write_file((dir / "eval_items.jsonl").string(), records_to_jsonl(run.records));
        std::cerr << "wrote " << (dir / "eval_summary.json").string() << " and "
                  << (dir / "eval_items.jsonl").string() << "\n";
    }
    return kExitOk;
}

int run_render(const std::string& report_path, const std::string& output) {
    const Report report = report_from_json(read_file_or_die(report_path));
    const std::string html = render_html(report);
    if (output.empty() || output == "-") {
        std::cout << html;
    } else {
        write_file(output, html);
        std::cerr << "wrote " << output << "\n";
    }
    return kExitOk;
}

BotLoop* g_bot_loop = nullptr;

void handle_signal(int) {
    if (g_bot_loop) g_bot_loop->stop();
}

int run_serve(const CommonFlags& flags) {
    const AppConfig cfg = load_config_or_die(flags);
    PromptBundle storage;
    const PromptBundle* bundle = bundle_for(cfg, storage);
    const Backends backends = make_backends(flags, cfg);
    const bool agent = flags.strategy == "agent";

    const auto answer = [&, bundle](const std::string& statement) -> std::string {
        Verdict verdict;
        if (agent) {
            AgentOptions options;
            options.max_steps = flags.max_steps;
            options.model_id = cfg.provider.model_id;
            options.bundle = bundle;
            verdict = verify_with_agent(statement, *backends.model, *backends.search, options).first;
        } else {
            const std::string prompt =
                bundle ? build_fewshot_prompt(statement, *bundle) : build_fewshot_prompt(statement);
            const std::string raw =
                backends.model->complete(ModelRequest::for_prompt(prompt, cfg.provider.model_id));
            verdict = parse_verdict({raw, Strategy::FewShot});
        }
        if (verdict.is_judged() && verdict.false_part)
            verdict.false_part->span = locate_false_part(statement, verdict.false_part->text);
        return format_verdict_text(verdict);
    };

    BotLoop loop(cfg.bot, answer);
    g_bot_loop = &loop;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cerr << "bot polling " << cfg.bot.api_base << " (ctrl-c to stop)\n";
    loop.run();
    g_bot_loop = nullptr;
    std::cerr << "bot stopped after " << loop.replies_sent() << " replies\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"verity: sentence-level veracity assessment for everyday content"};
    app.require_subcommand(1);

    CommonFlags check_flags, scan_flags, eval_flags, serve_flags;
    std::string statement, scan_input, scan_kind = "auto", scan_out = ".";
    std::string dataset_path, eval_format, eval_mode = "polarity", eval_out;
    std::string render_input, render_output;
    bool check_json = false;

    CLI::App* check = app.add_subcommand("check", "Judge one statement");
    check->add_option("statement", statement, "Statement to judge (stdin if omitted)");
    check->add_flag("--json", check_json, "Print the verdict as JSON");
    add_common_flags(check, check_flags);

    CLI::App* scan = app.add_subcommand("scan", "Assess a URL or file and write reports");
    scan->add_option("input", scan_input, "URL or file path")->required();
    scan->add_option("--kind", scan_kind, "Input kind")
        ->check(CLI::IsMember({"auto", "text", "plaintext", "html", "srt", "vtt"}));
    scan->add_option("--out", scan_out, "Output directory");
    add_common_flags(scan, scan_flags, /*with_stamp=*/true);

    CLI::App* eval = app.add_subcommand("eval", "Run the labeled-dataset accuracy harness");
    eval->add_option("dataset", dataset_path, "CSV or JSONL dataset")->required();
    eval->add_option("--format", eval_format, "Dataset format")->check(CLI::IsMember({"csv", "jsonl"}));
    eval->add_option("--mode", eval_mode, "Correctness rule")
        ->check(CLI::IsMember({"polarity", "coarse"}));
    eval->add_option("--out", eval_out, "Directory for summary JSON and per-item JSONL");
    add_common_flags(eval, eval_flags);

    CLI::App* render = app.add_subcommand("render", "Render HTML from a JSON report");
    render->add_option("report", render_input, "report.json path")->required();
    render->add_option("--output", render_output, "HTML output path (default stdout)");

    CLI::App* serve = app.add_subcommand("serve", "Run the Telegram bot loop");
    add_common_flags(serve, serve_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (check->parsed()) return run_check(check_flags, statement, check_json);
        if (scan->parsed()) return run_scan(scan_flags, scan_input, scan_kind, scan_out);
        if (eval->parsed())
            return run_eval_cmd(eval_flags, dataset_path, eval_format, eval_mode, eval_out);
        if (render->parsed()) return run_render(render_input, render_output);
        if (serve->parsed()) return run_serve(serve_flags);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}
