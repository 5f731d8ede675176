// Acceptance suite: runs the project's release gate offline (mock/replay
// backends and local stub servers only) and prints one pass/fail line per
// criterion.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "verity/bot.hpp"
#include "verity/eval.hpp"
#include "verity/http_provider.hpp"
#include "verity/ingest.hpp"
#include "verity/report.hpp"
#include "verity/segment.hpp"

using namespace verity;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw Failure(what);
}

std::string source_dir() {
#ifdef VERITY_SOURCE_DIR
    return VERITY_SOURCE_DIR;
#else
    return ".";
#endif
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::mt19937 rng(0xACCE97);

int rand_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++count;
    return count;
}

struct ScratchDir {
    std::filesystem::path path;
    explicit ScratchDir(const char* tag) {
        path = std::filesystem::temp_directory_path() /
               (std::string("verity_acceptance_") + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str(const std::string& rel) const { return (path / rel).string(); }
};

// ---------------------------------------------------------------------------
// Criterion 1: accuracy arithmetic on the fixed count fixtures.
// ---------------------------------------------------------------------------

void criterion_accuracy_arithmetic() {
    std::vector<Correctness> gpt4(14, Correctness::Correct);
    gpt4.insert(gpt4.end(), 3, Correctness::Wrong);
    gpt4.insert(gpt4.end(), 3, Correctness::Unable);
    const EvalSummary a = summarize(gpt4);
    require(a.total == 20 && a.correct == 14 && a.wrong == 3 && a.unable == 3,
            "counts (20,14,3,3) not preserved");
    require(a.accuracy_percent == 82, "14/(14+3) must round to 82%");

    std::vector<Correctness> agent(16, Correctness::Correct);
    agent.insert(agent.end(), 3, Correctness::Wrong);
    agent.insert(agent.end(), 1, Correctness::Unable);
    const EvalSummary b = summarize(agent);
    require(b.total == 20 && b.correct == 16 && b.wrong == 3 && b.unable == 1,
            "counts (20,16,3,1) not preserved");
    require(b.accuracy_percent == 84, "16/(16+3) must round to 84%");

    require(!accuracy_percent_of(0, 0).has_value(), "empty denominator must yield no accuracy");
}

// ---------------------------------------------------------------------------
// Criterion 2: verdict parser round-trips the five worked outputs.
// ---------------------------------------------------------------------------

void criterion_parser_roundtrip() {
    struct Expected {
        int score;
        VeracityLabel label;
        const char* false_part;
    };
    const Expected expected[5] = {
        {100, VeracityLabel::True, nullptr},
        {0, VeracityLabel::False, "Clint Eastwood said"},
        {30, VeracityLabel::MostlyFalse, "did not keep"},
        {0, VeracityLabel::False, "rioting now over sanctuary cities"},
        {80, VeracityLabel::MostlyTrue, "fallen behind"},
    };
    const auto& examples = default_bundle().examples;
    require(examples.size() == 5, "default bundle must carry five examples");
    for (std::size_t i = 0; i < 5; ++i) {
        const Verdict v = parse_verdict({examples[i].output, Strategy::FewShot});
        require(v.outcome == Outcome::Judged, "example output must parse as judged");
        require(v.score == expected[i].score, "score mismatch on example " + std::to_string(i + 1));
        require(v.label == expected[i].label, "label mismatch on example " + std::to_string(i + 1));
        if (expected[i].false_part == nullptr)
            require(!v.false_part.has_value(), "example " + std::to_string(i + 1) + " must have no false part");
        else
            require(v.false_part && v.false_part->text == expected[i].false_part,
                    "false-part mismatch on example " + std::to_string(i + 1));
    }
    require(parse_verdict({"null", Strategy::FewShot}).outcome == Outcome::NonVerifiable,
            "\"null\" must parse as non-verifiable");
    require(parse_verdict({"Unable to judge.", Strategy::FewShot}).outcome == Outcome::UnableToJudge,
            "\"Unable to judge\" must parse as unable-to-judge");
}

// ---------------------------------------------------------------------------
// Criterion 3: default prompt rendering is byte-identical to the golden file.
// ---------------------------------------------------------------------------

void criterion_prompt_golden() {
    const std::string golden = read_file(source_dir() + "/tests/golden/fewshot_prompt.golden.txt");
    require(render_prompt(default_bundle()) == golden, "rendered default prompt differs from golden file");
    require(build_fewshot_prompt(default_bundle().question) == golden,
            "question substitution changes bytes");
    // The shipped template file renders identically.
    const PromptBundle from_file = load_bundle(source_dir() + "/data/templates/fewshot_v1.txt");
    require(render_prompt(from_file) == golden, "template file drifted from the golden prompt");
}

// ---------------------------------------------------------------------------
// Criterion 4: byte-stable end-to-end outputs on a replay backend seeded from
// the fixture verdicts, across >= 3 runs and concurrency 1 vs 4.
// ---------------------------------------------------------------------------

void criterion_replay_stability() {
    ScratchDir scratch("replay");
    const std::string model_cache = scratch.str("model.jsonl");
    const std::string search_cache = scratch.str("search.jsonl");

    const Dataset fixtures =
        load_dataset(source_dir() + "/tests/fixtures/factchecks3.csv", DatasetFormat::Csv);
    std::string doc_text;
    for (const auto& item : fixtures.items) doc_text += item.statement + "\n\n";
    const SourceDocument doc = extract_plaintext(doc_text, "factchecks");

    AssessOptions assess_options;
    assess_options.created_at = "2026-01-01T00:00:00Z";
    assess_options.strategy = Strategy::Agent;

    {
        auto model = make_demo_model_backend();
        auto search = make_demo_search_backend();
        RecordReplayModel record_model(model, model_cache, CacheMode::Record);
        RecordReplaySearch record_search(search, search_cache, CacheMode::Record);
        run_eval(fixtures, record_model, nullptr, {});
        assess_document(doc, record_model, &record_search, assess_options);
    }

    std::vector<std::string> eval_outputs;
    std::vector<std::string> report_outputs;
    for (const int concurrency : {1, 4, 1, 4, 1}) {
        RecordReplayModel replay_model(nullptr, model_cache, CacheMode::Replay);
        RecordReplaySearch replay_search(nullptr, search_cache, CacheMode::Replay);
        EvalOptions eval_options;
        eval_options.concurrency = concurrency;
        const EvalRun run = run_eval(fixtures, replay_model, nullptr, eval_options);
        eval_outputs.push_back(summary_to_json(run.summary, eval_options.strategy, eval_options.mode) +
                               records_to_jsonl(run.records));
        AssessOptions options = assess_options;
        options.concurrency = concurrency;
        report_outputs.push_back(render_json(assess_document(doc, replay_model, &replay_search, options)));
    }
    for (std::size_t i = 1; i < eval_outputs.size(); ++i) {
        require(eval_outputs[i] == eval_outputs[0], "eval output differs across runs/concurrency");
        require(report_outputs[i] == report_outputs[0], "report output differs across runs/concurrency");
    }
    // The fixture verdicts actually judged something.
    require(report_outputs[0].find("\"mean_percent\"") != std::string::npos,
            "replayed report has no global mean");
}

// ---------------------------------------------------------------------------
// Criterion 5: property suite, >= 1000 generated cases per property.
// ---------------------------------------------------------------------------

std::vector<SentenceVerdict> random_verdicts() {
    std::vector<SentenceVerdict> out;
    const int n = rand_int(0, 24);
    for (int i = 0; i < n; ++i) {
        Verdict v;
        const int roll = rand_int(0, 4);
        if (roll == 0) v = Verdict::non_verifiable();
        else if (roll == 1) v = Verdict::unable();
        else v = Verdict::judged(rand_int(0, 100));
        out.push_back({static_cast<std::size_t>(i), v});
    }
    return out;
}

void criterion_properties() {
    // Global score: exclusion, permutation, prefix-last == mean.
    for (int iter = 0; iter < 1000; ++iter) {
        auto verdicts = random_verdicts();
        const GlobalScore g = global_score(verdicts);
        require(g.judged_count + g.excluded_count == verdicts.size(), "sum law violated");
        require(g.mean_percent.has_value() == (g.judged_count > 0), "absence rule violated");
        require(g.prefix_series.size() == verdicts.size(), "prefix length mismatch");
        if (!verdicts.empty())
            require(g.prefix_series.back() == g.mean_percent, "prefix last != mean");
        long long sum = 0, judged = 0;
        for (const auto& sv : verdicts)
            if (sv.verdict.is_judged()) { sum += sv.verdict.score; ++judged; }
        if (judged > 0) {
            const int oracle = static_cast<int>(std::floor(static_cast<long double>(sum) / judged + 0.5L));
            require(g.mean_percent == oracle, "mean differs from rational oracle");
        }
        std::shuffle(verdicts.begin(), verdicts.end(), rng);
        require(global_score(verdicts).mean_percent == g.mean_percent, "mean not permutation-invariant");
    }

    // Labels: totality and anchor correctness over all 101 scores.
    for (int s = 0; s <= 100; ++s) {
        const VeracityLabel l = label_from_score(s);
        if (s > 0)
            require(static_cast<int>(l) >= static_cast<int>(label_from_score(s - 1)),
                    "label order not monotone");
    }
    require(label_from_score(100) == VeracityLabel::True, "anchor 100 wrong");
    require(label_from_score(80) == VeracityLabel::MostlyTrue, "anchor 80 wrong");
    require(label_from_score(30) == VeracityLabel::MostlyFalse, "anchor 30 wrong");
    require(label_from_score(0) == VeracityLabel::False, "anchor 0 wrong");

    // Segmentation: coverage and idempotence.
    static const char* kWords[] = {"alpha", "bravo", "Charlie", "Dr.", "U.S.", "中文", "echo"};
    static const char* kSeps[] = {". ", "! ", "? ", "。", " ", ".\n\n", "… "};
    static const char* kQuotes[] = {"\"", "'", "(", ")", ""};
    for (int iter = 0; iter < 1000; ++iter) {
        std::string text;
        const int pieces = rand_int(0, 30);
        for (int k = 0; k < pieces; ++k) {
            text += kQuotes[rand_int(0, 4)];
            text += kWords[rand_int(0, 6)];
            text += kSeps[rand_int(0, 6)];
        }
        const auto sentences = split_sentences(text);
        const auto cps = utf8::decode(text).codepoints;
        std::vector<int> owner(cps.size(), 0);
        for (const Sentence& s : sentences) {
            require(utf8::slice(text, s.range) == s.text, "sentence text != slice");
            for (std::size_t c = s.range.begin; c < s.range.end; ++c) ++owner[c];
        }
        for (std::size_t c = 0; c < cps.size(); ++c)
            if (!is_space_cp(cps[c])) require(owner[c] == 1, "coverage violated");
        for (const Sentence& s : sentences) {
            const auto again = split_sentences(s.text);
            require(again.size() == 1 && again[0].text == s.text, "idempotence violated");
        }
    }

    // Parser: no panic on arbitrary bytes.
    for (int iter = 0; iter < 1000; ++iter) {
        std::string junk;
        const int len = rand_int(0, 80);
        for (int k = 0; k < len; ++k) junk.push_back(static_cast<char>(rand_int(1, 255)));
        try {
            const Verdict v = parse_verdict({junk, Strategy::FewShot});
            require(v.outcome == Outcome::Judged || v.outcome == Outcome::NonVerifiable ||
                        v.outcome == Outcome::UnableToJudge,
                    "parser produced an invalid outcome");
        } catch (const ParseError& e) {
            require(e.raw_text == junk, "ParseError must carry the raw text");
        }
    }

    // JSON report round trip: structural equality and canonical bytes.
    for (int iter = 0; iter < 1000; ++iter) {
        Report report;
        report.origin = "o" + std::to_string(iter);
        report.kind = static_cast<DocKind>(rand_int(0, 3));
        report.strategy = rand_int(0, 1) ? Strategy::Agent : Strategy::FewShot;
        report.model_id = "m";
        report.created_at = "2026-01-01T00:00:00Z";
        const int n = rand_int(0, 5);
        for (int i = 0; i < n; ++i) {
            Sentence s;
            s.index = static_cast<std::size_t>(i);
            s.text = "Séntence " + std::to_string(i) + ".";
            s.range = {static_cast<std::size_t>(i * 20), static_cast<std::size_t>(i * 20 + 12)};
            report.sentences.push_back(s);
            Verdict v;
            const int roll = rand_int(0, 3);
            if (roll == 0) v = Verdict::non_verifiable();
            else if (roll == 1) v = Verdict::unable("r");
            else {
                v = Verdict::judged(rand_int(0, 100));
                if (rand_int(0, 1)) v.false_part = FalsePart{"Séntence", CharRange{0, 8}};
                v.reason = "because " + std::to_string(i);
            }
            report.verdicts.push_back({s.index, v});
            report.marks.push_back(v.false_part ? std::vector<CharRange>{CharRange{0, 8}}
                                                : std::vector<CharRange>{});
            report.agent_traces.emplace_back(std::nullopt);
        }
        report.global = global_score(report.verdicts);
        if (rand_int(0, 1)) report.warnings.push_back("w");
        const std::string once = render_json(report);
        const Report back = report_from_json(once);
        require(back == report, "report JSON round trip lost structure");
        require(render_json(back) == once, "report JSON re-serialization changed bytes");
    }
}

// ---------------------------------------------------------------------------
// Criterion 6: rendering checks on the six-sentence fixture document.
// ---------------------------------------------------------------------------

void criterion_rendering() {
    auto mock = std::make_shared<MockModelBackend>();
    mock->answers["Trade across the region quadrupled in a single decade."] =
        "Veracity score: 100% (True), False Part: /";
    mock->answers["The harbor city has always welcomed every merchant fleet."] =
        "Veracity score: 85% (Mostly True), False Part: always welcomed";
    mock->answers["Grain reserves kept pace with population growth."] =
        "Veracity score: 80% (Mostly True), False Part: kept pace";
    mock->answers["Officials say the aqueduct was finished in 2018."] =
        "Veracity score: 50% (Mostly True), False Part: finished in 2018";
    mock->answers["The <b> tag museum opened with zero visitors."] =
        "Veracity score: 0% (False), False Part: zero visitors";
    mock->answers["Some say the moon is made of green cheese."] = "null";

    const SourceDocument doc =
        extract_plaintext(read_file(source_dir() + "/tests/fixtures/doc6.txt"), "doc6.txt");
    AssessOptions options;
    options.created_at = "2026-01-01T00:00:00Z";
    const Report report = assess_document(doc, *mock, nullptr, options);
    require(report.sentences.size() == 6, "fixture must segment into six sentences");

    const std::string html = render_html(report);

    std::size_t located = 0;
    for (const auto& marks : report.marks) located += marks.size();
    require(located == 4, "expected four located false parts in the fixture");
    require(count_occurrences(html, "<mark class=\"fp\">") == located,
            "red-underline marks != located false parts");

    std::size_t zero_scores = 0;
    for (const auto& sv : report.verdicts)
        if (sv.verdict.is_judged() && sv.verdict.score == 0) ++zero_scores;
    require(zero_scores == 1, "fixture must contain exactly one 0% sentence");
    require(count_occurrences(html, "<span class=\"s0\">") == zero_scores,
            "blue highlight must wrap 0% sentences and only those");

    require(report.global == global_score(report.verdicts), "global must be recomputable");
    require(report.global.mean_percent == 63, "fixture global score must be 63");
    require(html.find("<div class=\"badge\">63%</div>") != std::string::npos,
            "badge must equal the global score output");

    require(html.find("&lt;b&gt;") != std::string::npos, "sentence bodies must be HTML-escaped");
    require(html.find("The <b> tag") == std::string::npos, "raw sentence markup leaked into the HTML");
}

// ---------------------------------------------------------------------------
// Criterion 7: bot end-to-end against a local stub server.
// ---------------------------------------------------------------------------

struct BotStub {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::mutex mu;
    std::deque<nlohmann::json> queue;
    std::vector<nlohmann::json> delivered;
    std::vector<std::string> replies;
    std::vector<int> status_script;
    std::size_t script_pos = 0;
    bool redeliver_once = false;

    BotStub() {
        server.Get("/botacceptance/getUpdates", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu);
            if (script_pos < status_script.size()) {
                res.status = status_script[script_pos++];
                res.set_content("{}", "application/json");
                return;
            }
            nlohmann::json payload;
            payload["ok"] = true;
            payload["result"] = nlohmann::json::array();
            if (redeliver_once && !delivered.empty()) {
                for (const auto& u : delivered) payload["result"].push_back(u);
                redeliver_once = false;
            }
            while (!queue.empty()) {
                payload["result"].push_back(queue.front());
                delivered.push_back(queue.front());
                queue.pop_front();
            }
            res.set_content(payload.dump(), "application/json");
        });
        server.Post("/botacceptance/sendMessage", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu);
            replies.push_back(nlohmann::json::parse(req.body).value("text", ""));
            res.set_content("{\"ok\":true}", "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~BotStub() {
        server.stop();
        thread.join();
    }
};

void criterion_bot_e2e() {
    ::setenv("VERITY_ACCEPT_BOT_TOKEN", "acceptance", 1);
    BotStub stub;
    {
        std::lock_guard lock(stub.mu);
        stub.status_script = {500};  // first poll fails, retried inside the loop
        stub.queue.push_back({{"update_id", 900},
                              {"message", {{"chat", {{"id", 5}}},
                                           {"text", "As Governor, Romney did not keep public safety "
                                                    "funding in line with inflation."}}}});
        stub.redeliver_once = true;
    }
    BotOptions options;
    options.api_base = "http://127.0.0.1:" + std::to_string(stub.port);
    options.token_env = "VERITY_ACCEPT_BOT_TOKEN";
    options.poll_timeout_s = 1;
    options.poll_interval = std::chrono::milliseconds(10);
    options.retry.max_attempts = 4;
    options.retry.base_backoff = std::chrono::milliseconds(5);

    auto model = make_demo_model_backend();
    BotLoop loop(options, [&](const std::string& statement) {
        const std::string raw = model->complete(ModelRequest::for_prompt(build_fewshot_prompt(statement)));
        return format_verdict_text(parse_verdict({raw, Strategy::FewShot}));
    });
    std::thread worker([&] { loop.run(); });
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(8);
    while (std::chrono::steady_clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(25));
        std::lock_guard lock(stub.mu);
        // Wait until the queued update, its redelivery, and a few idle polls
        // have all happened.
        if (!stub.replies.empty() && stub.delivered.size() >= 1 && !stub.redeliver_once &&
            stub.script_pos == stub.status_script.size())
            break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(200));  // absorb any duplicate reply
    loop.stop();
    worker.join();
    ::unsetenv("VERITY_ACCEPT_BOT_TOKEN");

    std::lock_guard lock(stub.mu);
    require(stub.replies.size() == 1, "expected exactly one reply, got " +
                                          std::to_string(stub.replies.size()));
    require(stub.replies[0].find("30% (Mostly False)") != std::string::npos,
            "reply must carry the mock verdict");
    require(stub.replies[0].find("did not keep") != std::string::npos,
            "reply must carry the false part");
}

// ---------------------------------------------------------------------------
// Criterion 8: provider discipline on a stub server.
// ---------------------------------------------------------------------------

struct ChatStub {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    std::vector<int> script;
    std::atomic<std::size_t> script_pos{0};

    ChatStub() {
        server.Post("/v1/chat/completions", [this](const httplib::Request&, httplib::Response& res) {
            requests.fetch_add(1);
            const std::size_t k = script_pos.fetch_add(1);
            res.status = k < script.size() ? script[k] : 200;
            if (res.status == 200) {
                nlohmann::json payload = {
                    {"choices",
                     {{{"message", {{"role", "assistant"}, {"content", "Veracity score: 80% (Mostly True), False Part: /"}}}}}}};
                res.set_content(payload.dump(), "application/json");
            } else {
                res.set_content("{}", "application/json");
            }
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~ChatStub() {
        server.stop();
        thread.join();
    }

    ProviderConfig config() const {
        ProviderConfig cfg;
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
        cfg.auth_env_var = "VERITY_ACCEPT_KEY";
        cfg.retry.max_attempts = 3;
        cfg.retry.base_backoff = std::chrono::milliseconds(5);
        cfg.rate_limit_per_minute = 0;
        return cfg;
    }
};

void criterion_provider_discipline() {
    ::setenv("VERITY_ACCEPT_KEY", "k", 1);
    {
        ChatStub stub;
        stub.script = {429};
        HttpChatBackend backend(stub.config());
        const std::string answer =
            backend.complete(ModelRequest::for_prompt("input: \"q\"\noutput:\n"));
        require(answer.find("80%") != std::string::npos, "retry path must succeed after 429");
        require(stub.requests.load() == 2, "429 then 200 must take exactly two requests");
    }
    {
        ChatStub stub;
        stub.script = {401, 401};
        HttpChatBackend backend(stub.config());
        bool auth_error = false;
        try {
            backend.complete(ModelRequest::for_prompt("input: \"q\"\noutput:\n"));
        } catch (const AuthError&) {
            auth_error = true;
        }
        require(auth_error, "401 must raise AuthError");
        require(stub.requests.load() == 1, "401 must not be retried");
    }
    ::unsetenv("VERITY_ACCEPT_KEY");

    // Observed grant rate <= configured limit over a simulated 60s window.
    using Clock = RateLimiter::Clock;
    Clock::time_point fake_now = Clock::now();
    const int limit = 30;
    RateLimiter limiter(limit, [&] { return fake_now; });
    std::vector<Clock::time_point> grants;
    for (int tick = 0; tick < 1200; ++tick) {  // 2 simulated minutes, 100ms ticks
        for (int burst = 0; burst < 3; ++burst)
            if (limiter.try_acquire()) grants.push_back(fake_now);
        fake_now += std::chrono::milliseconds(100);
    }
    require(grants.size() > static_cast<std::size_t>(limit), "limiter starved below its budget");
    for (std::size_t i = 0; i < grants.size(); ++i) {
        std::size_t in_window = 0;
        for (std::size_t k = i; k < grants.size() && grants[k] - grants[i] < std::chrono::seconds(60); ++k)
            ++in_window;
        require(in_window <= static_cast<std::size_t>(limit),
                "more grants than the limit inside a 60s window");
    }
}

struct Criterion {
    int number;
    const char* summary;
    double budget_seconds;
    std::function<void()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "accuracy arithmetic: (20,14,3,3)->82%, (20,16,3,1)->84%", 1.0, criterion_accuracy_arithmetic},
        {2, "verdict parser round-trips the five worked outputs plus sentinels", 5.0,
         criterion_parser_roundtrip},
        {3, "default prompt rendering is byte-identical to the golden file", 5.0, criterion_prompt_golden},
        {4, "replay-backed eval and report outputs byte-stable across runs and concurrency", 10.0,
         criterion_replay_stability},
        {5, "property suite (>=1000 cases per property)", 60.0, criterion_properties},
        {6, "rendering checks on the six-sentence fixture", 5.0, criterion_rendering},
        {7, "bot end-to-end on a local stub: one reply, dedupe, 500 retry", 10.0, criterion_bot_e2e},
        {8, "provider discipline: 429 retry, 401 no-retry, rate limit window", 10.0,
         criterion_provider_discipline},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            criterion.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (error.empty() && elapsed > criterion.budget_seconds)
            error = "exceeded the " + std::to_string(criterion.budget_seconds) + "s budget";
        if (error.empty()) {
            std::printf("PASS  criterion %d: %s (%.2fs)\n", criterion.number, criterion.summary, elapsed);
        } else {
            std::printf("FAIL  criterion %d: %s (%.2fs) — %s\n", criterion.number, criterion.summary,
                        elapsed, error.c_str());
            ++failures;
        }
    }
    if (failures == 0) {
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
        return 0;
    }
    std::printf("acceptance: %d of %zu criteria failed\n", failures, criteria.size());
    return 1;
}
