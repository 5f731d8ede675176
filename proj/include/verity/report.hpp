#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "verity/agent.hpp"
#include "verity/ingest.hpp"
#include "verity/prompting.hpp"
#include "verity/provider.hpp"
#include "verity/segment.hpp"
#include "verity/verdict.hpp"
#include "verity/verdict_parse.hpp"

namespace verity {

using ordered_json = nlohmann::ordered_json;

/// Scored document: per-sentence verdicts, the global score, and the render
/// metadata (located false-part spans, subtitle cue timings).
struct Report {
    std::string origin;
    DocKind kind = DocKind::Plaintext;
    Strategy strategy = Strategy::FewShot;
    std::string model_id;
    std::string created_at;  // ISO 8601 UTC
    std::vector<Sentence> sentences;
    std::vector<SentenceVerdict> verdicts;           // index-aligned with sentences
    std::vector<std::vector<CharRange>> marks;       // located false-part spans per sentence
    std::vector<std::optional<AgentTrace>> agent_traces;  // index-aligned; agent strategy only
    GlobalScore global;
    std::vector<Cue> cues;                           // subtitle kinds only
    std::vector<std::string> warnings;

    bool operator==(const Report&) const = default;
};

struct AssessOptions {
    Strategy strategy = Strategy::FewShot;
    int concurrency = 4;
    std::string model_id = "gpt-4";
    double temperature = 0.0;
    int max_steps = 5;
    std::size_t evidence_budget = 4000;
    std::string created_at;  // empty = stamp with the current time
    const PromptBundle* bundle = nullptr;
    SegmentOptions segmentation;
};

namespace detail {

/// Runs fn(0..n-1) on up to `limit` worker threads. Exceptions surface from
/// the worker that hit them; remaining work still drains.
inline void bounded_parallel_for(std::size_t n, int limit, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(std::max(1, limit), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mu;
    std::exception_ptr error;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Judges every sentence exactly once. Per-sentence parse or backend
/// failures downgrade to UnableToJudge with a warning; the pipeline never
/// aborts mid-document. Results are ordered by sentence index regardless of
/// execution order.
inline Report assess_document(const SourceDocument& doc, ModelBackend& model, SearchBackend* search,
                              const AssessOptions& options = {}) {
    if (options.strategy == Strategy::Agent && search == nullptr)
        throw std::invalid_argument("agent strategy requires a search backend");
    const PromptBundle& bundle = options.bundle ? *options.bundle : default_bundle();

    Report report;
    report.origin = doc.origin;
    report.kind = doc.kind;
    report.strategy = options.strategy;
    report.model_id = options.model_id;
    report.created_at = options.created_at.empty() ? detail::now_iso8601_utc() : options.created_at;
    report.cues = doc.cues;
    report.warnings = doc.warnings;
    report.sentences = split_sentences(doc.text, options.segmentation);

    const std::size_t n = report.sentences.size();
    report.verdicts.resize(n);
    report.marks.resize(n);
    report.agent_traces.resize(n);
    std::vector<std::vector<std::string>> slot_warnings(n);

    detail::bounded_parallel_for(n, options.concurrency, [&](std::size_t i) {
        const Sentence& sentence = report.sentences[i];
        Verdict verdict;
        try {
            if (options.strategy == Strategy::FewShot) {
                const std::string prompt = build_fewshot_prompt(sentence.text, bundle);
                const std::string raw = model.complete(
                    ModelRequest::for_prompt(prompt, options.model_id, options.temperature));
                verdict = parse_verdict({raw, Strategy::FewShot}, &slot_warnings[i]);
            } else {
                AgentOptions agent_options;
                agent_options.max_steps = options.max_steps;
                agent_options.model_id = options.model_id;
                agent_options.temperature = options.temperature;
                agent_options.evidence_budget = options.evidence_budget;
                agent_options.bundle = &bundle;
                auto [v, trace] = verify_with_agent(sentence.text, model, *search, agent_options,
                                                    &slot_warnings[i]);
                verdict = std::move(v);
                report.agent_traces[i] = std::move(trace);
            }
        } catch (const ParseError& e) {
            slot_warnings[i].push_back("sentence " + std::to_string(i) +
                                       ": unparseable answer, downgraded to unable-to-judge");
            verdict = Verdict::unable(trim_copy(e.raw_text).substr(0, 200));
        } catch (const AgentError& e) {
            slot_warnings[i].push_back("sentence " + std::to_string(i) + ": " + e.what() +
                                       ", downgraded to unable-to-judge");
            report.agent_traces[i] = e.trace;
            verdict = Verdict::unable();
        } catch (const ProviderError& e) {
            slot_warnings[i].push_back("sentence " + std::to_string(i) + ": " + e.what() +
                                       ", downgraded to unable-to-judge");
            verdict = Verdict::unable();
        }
        if (verdict.is_judged() && verdict.false_part) {
            verdict.false_part->span = locate_false_part(sentence.text, verdict.false_part->text);
            report.marks[i] = locate_false_parts(sentence.text, verdict.false_part->text);
        }
        report.verdicts[i] = {i, std::move(verdict)};
    });

    for (auto& w : slot_warnings)
        report.warnings.insert(report.warnings.end(), w.begin(), w.end());
    report.global = global_score(report.verdicts);
    return report;
}

// ---------------------------------------------------------------------------
// JSON schema (version 1)
// ---------------------------------------------------------------------------

namespace detail {

inline ordered_json range_to_json(const CharRange& r) {
    return ordered_json::array({r.begin, r.end});
}

inline CharRange range_from_json(const ordered_json& j) {
    return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
}

}  // namespace detail

inline ordered_json verdict_to_json(const Verdict& v) {
    ordered_json j;
    j["outcome"] = std::string(outcome_slug(v.outcome));
    if (v.outcome == Outcome::Judged) {
        j["score"] = v.score;
        j["label"] = std::string(label_slug(v.label));
        if (v.false_part) {
            ordered_json fp;
            fp["text"] = v.false_part->text;
            if (v.false_part->span) fp["span"] = detail::range_to_json(*v.false_part->span);
            j["false_part"] = std::move(fp);
        }
    }
    if (!v.reason.empty()) j["reason"] = v.reason;
    return j;
}

inline Verdict verdict_from_json(const ordered_json& j) {
    const std::string outcome = j.at("outcome").get<std::string>();
    if (outcome == "non-verifiable") return Verdict::non_verifiable();
    if (outcome == "unable-to-judge") return Verdict::unable(j.value("reason", ""));
    Verdict v = Verdict::judged(j.at("score").get<int>());
    if (const auto it = j.find("false_part"); it != j.end()) {
        FalsePart fp;
        fp.text = it->at("text").get<std::string>();
        if (it->contains("span")) fp.span = detail::range_from_json(it->at("span"));
        v.false_part = std::move(fp);
    }
    v.reason = j.value("reason", "");
    return v;
}

inline ordered_json trace_to_json(const AgentTrace& t) {
    ordered_json j;
    j["claim"] = t.claim;
    j["plan"] = t.plan;
    ordered_json steps = ordered_json::array();
    for (const AgentStep& s : t.steps) {
        ordered_json step;
        step["sub_question"] = s.sub_question;
        step["query"] = s.query;
        ordered_json results = ordered_json::array();
        for (const SearchResult& r : s.results)
            results.push_back({{"title", r.title}, {"url", r.url}, {"snippet", r.snippet}});
        step["results"] = std::move(results);
        steps.push_back(std::move(step));
    }
    j["steps"] = std::move(steps);
    j["final_raw"] = t.final_raw;
    j["step_count"] = t.step_count;
    return j;
}

inline AgentTrace trace_from_json(const ordered_json& j) {
    AgentTrace t;
    t.claim = j.value("claim", "");
    for (const auto& p : j.value("plan", ordered_json::array())) t.plan.push_back(p.get<std::string>());
    for (const auto& s : j.value("steps", ordered_json::array())) {
        AgentStep step;
        step.sub_question = s.value("sub_question", "");
        step.query = s.value("query", "");
        for (const auto& r : s.value("results", ordered_json::array()))
            step.results.push_back({r.value("title", ""), r.value("url", ""), r.value("snippet", "")});
        t.steps.push_back(std::move(step));
    }
    t.final_raw = j.value("final_raw", "");
    t.step_count = j.value("step_count", std::size_t{0});
    return t;
}

/// Canonical serialization: fixed field order, two-space indent, trailing
/// newline. serialize -> parse -> serialize is byte-identical.
inline std::string render_json(const Report& report) {
    ordered_json j;
    j["schema_version"] = 1;
    j["origin"] = report.origin;
    j["kind"] = std::string(dockind_slug(report.kind));
    j["strategy"] = std::string(strategy_slug(report.strategy));
    j["model_id"] = report.model_id;
    j["created_at"] = report.created_at;

    ordered_json global;
    global["judged_count"] = report.global.judged_count;
    global["excluded_count"] = report.global.excluded_count;
    if (report.global.mean_percent) global["mean_percent"] = *report.global.mean_percent;
    ordered_json series = ordered_json::array();
    for (const auto& entry : report.global.prefix_series) {
        if (entry) series.push_back(*entry);
        else series.push_back(nullptr);
    }
    global["prefix_series"] = std::move(series);
    j["global"] = std::move(global);

    ordered_json sentences = ordered_json::array();
    for (std::size_t i = 0; i < report.sentences.size(); ++i) {
        const Sentence& s = report.sentences[i];
        ordered_json entry;
        entry["index"] = s.index;
        entry["text"] = s.text;
        entry["range"] = detail::range_to_json(s.range);
        entry["verdict"] = verdict_to_json(report.verdicts.at(i).verdict);
        ordered_json marks = ordered_json::array();
        if (i < report.marks.size())
            for (const CharRange& r : report.marks[i]) marks.push_back(detail::range_to_json(r));
        entry["marks"] = std::move(marks);
        if (i < report.agent_traces.size() && report.agent_traces[i])
            entry["agent_trace"] = trace_to_json(*report.agent_traces[i]);
        sentences.push_back(std::move(entry));
    }
    j["sentences"] = std::move(sentences);

    if (!report.cues.empty()) {
        ordered_json cues = ordered_json::array();
        for (const Cue& c : report.cues) {
            ordered_json cue;
            cue["start_ms"] = c.start_ms;
            cue["end_ms"] = c.end_ms;
            cue["range"] = detail::range_to_json(c.range);
            cues.push_back(std::move(cue));
        }
        j["cues"] = std::move(cues);
    }
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

inline Report report_from_json(std::string_view text) {
    const ordered_json j = ordered_json::parse(text);
    if (j.value("schema_version", 0) != 1)
        throw std::runtime_error("unsupported report schema version");
    Report report;
    report.origin = j.value("origin", "");
    if (const auto kind = dockind_from_slug(j.value("kind", "plaintext"))) report.kind = *kind;
    if (const auto strategy = strategy_from_slug(j.value("strategy", "fewshot")))
        report.strategy = *strategy;
    report.model_id = j.value("model_id", "");
    report.created_at = j.value("created_at", "");

    const ordered_json& global = j.at("global");
    report.global.judged_count = global.value("judged_count", std::size_t{0});
    report.global.excluded_count = global.value("excluded_count", std::size_t{0});
    if (global.contains("mean_percent")) report.global.mean_percent = global["mean_percent"].get<int>();
    for (const auto& entry : global.value("prefix_series", ordered_json::array())) {
        if (entry.is_null()) report.global.prefix_series.emplace_back(std::nullopt);
        else report.global.prefix_series.emplace_back(entry.get<int>());
    }

    for (const auto& entry : j.at("sentences")) {
        Sentence s;
        s.index = entry.at("index").get<std::size_t>();
        s.text = entry.at("text").get<std::string>();
        s.range = detail::range_from_json(entry.at("range"));
        report.sentences.push_back(std::move(s));
        report.verdicts.push_back({report.sentences.back().index, verdict_from_json(entry.at("verdict"))});
        std::vector<CharRange> marks;
        for (const auto& m : entry.value("marks", ordered_json::array()))
            marks.push_back(detail::range_from_json(m));
        report.marks.push_back(std::move(marks));
        if (entry.contains("agent_trace"))
            report.agent_traces.push_back(trace_from_json(entry.at("agent_trace")));
        else
            report.agent_traces.emplace_back(std::nullopt);
    }
    for (const auto& cue : j.value("cues", ordered_json::array()))
        report.cues.push_back({cue.at("start_ms").get<std::int64_t>(), cue.at("end_ms").get<std::int64_t>(),
                               detail::range_from_json(cue.at("range"))});
    for (const auto& w : j.value("warnings", ordered_json::array()))
        report.warnings.push_back(w.get<std::string>());
    return report;
}

// ---------------------------------------------------------------------------
// HTML rendering
// ---------------------------------------------------------------------------

namespace detail {

inline std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&#39;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

/// Sentence body with <mark class="fp"> wrapped around each located span.
inline std::string render_sentence_body(const std::string& text, const std::vector<CharRange>& marks) {
    std::string out;
    std::size_t cursor = 0;
    for (const CharRange& r : marks) {
        out += html_escape(utf8::slice(text, {cursor, r.begin}));
        out += "<mark class=\"fp\">";
        out += html_escape(utf8::slice(text, r));
        out += "</mark>";
        cursor = r.end;
    }
    out += html_escape(utf8::slice(text, {cursor, utf8::length(text)}));
    return out;
}

inline std::string sparkline_svg(const std::vector<std::optional<int>>& series) {
    if (series.empty()) return {};
    const int w = 120, h = 28;
    const double step = series.size() > 1 ? static_cast<double>(w) / (series.size() - 1) : 0.0;
    std::string points;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i]) continue;
        const double x = series.size() > 1 ? step * i : w / 2.0;
        const double y = h - (h - 4) * (*series[i] / 100.0) - 2;
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", x, y);
        points += buf;
    }
    if (points.empty()) return {};
    std::string svg = "<svg class=\"spark\" width=\"120\" height=\"28\" viewBox=\"0 0 120 28\" "
                      "xmlns=\"http://www.w3.org/2000/svg\">";
    svg += "<polyline fill=\"none\" stroke=\"#1565c0\" stroke-width=\"1.5\" points=\"" + points + "\"/>";
    svg += "</svg>";
    return svg;
}

inline constexpr std::string_view kReportCss = R"css(
body { font-family: Georgia, 'Times New Roman', serif; margin: 0; background: #fafafa; color: #212121; }
main { max-width: 52rem; margin: 0 auto; padding: 1rem 1.5rem 4rem; }
.badge-box { position: fixed; top: 12px; left: 12px; background: #fff; border: 1px solid #ddd;
  border-radius: 8px; padding: 10px 14px; box-shadow: 0 1px 4px rgba(0,0,0,.12); text-align: center; }
.badge { font-size: 1.9rem; font-weight: 700; color: #1565c0; }
.badge-label { font-size: .7rem; letter-spacing: .08em; text-transform: uppercase; color: #757575; }
.doc-meta { margin: 0 0 1.5rem 0; padding-top: .5rem; font-size: .85rem; color: #616161; }
.chart { margin: 1rem 0 2rem; }
.chart-row { display: flex; align-items: center; gap: .5rem; margin: 2px 0; }
.chart-idx { width: 2rem; text-align: right; font-size: .75rem; color: #9e9e9e; }
.chart-track { flex: 1; background: #eeeeee; height: 12px; border-radius: 2px; overflow: hidden; }
.chart-bar { height: 100%; background: #1565c0; }
.chart-bar.excluded { width: 100%; background: repeating-linear-gradient(45deg, #e0e0e0, #e0e0e0 4px, #f5f5f5 4px, #f5f5f5 8px); }
.chart-val { width: 3rem; font-size: .75rem; color: #616161; }
.sentence { margin: 1.1rem 0; }
.sentence .meta { font-size: .75rem; color: #9e9e9e; margin-bottom: .15rem; }
.sentence p.text { margin: 0; line-height: 1.55; white-space: pre-wrap; }
.sentence p.reason { margin: .25rem 0 0; font-size: .85rem; color: #616161; font-style: italic; }
.nv { color: #9e9e9e; }
.s0 { background: #bbdefb; }
mark.fp { background: none; color: inherit; text-decoration: underline; text-decoration-style: dashed;
  text-decoration-color: #c62828; text-decoration-thickness: 2px; text-underline-offset: 3px; }
.warnings { margin-top: 3rem; font-size: .8rem; color: #8d6e63; }
)css";

}  // namespace detail

/// Self-contained static HTML: global score badge (top-left) with a prefix
/// sparkline, a per-sentence bar chart, and the annotated text. Located
/// false parts get dashed red underlines; 0% sentences a blue highlight;
/// non-verifiable sentences are muted. No scripts, no external resources.
inline std::string render_html(const Report& report) {
    std::string html;
    html += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
    html += "<title>Veracity report</title>\n<style>";
    html += detail::kReportCss;
    html += "</style>\n</head>\n<body>\n";

    const std::string badge =
        report.global.mean_percent ? std::to_string(*report.global.mean_percent) + "%" : "n/a";
    html += "<aside class=\"badge-box\">\n";
    html += "  <div class=\"badge\">" + badge + "</div>\n";
    html += "  <div class=\"badge-label\">Global Veracity</div>\n";
    const std::string spark = detail::sparkline_svg(report.global.prefix_series);
    if (!spark.empty()) html += "  " + spark + "\n";
    html += "</aside>\n<main>\n";

    html += "<p class=\"doc-meta\">" + detail::html_escape(report.origin) + " &middot; " +
            std::string(dockind_slug(report.kind)) + " &middot; " +
            std::string(strategy_slug(report.strategy)) + " &middot; " +
            detail::html_escape(report.model_id) + " &middot; " +
            detail::html_escape(report.created_at) + "</p>\n";

    html += "<section class=\"chart\">\n";
    for (std::size_t i = 0; i < report.verdicts.size(); ++i) {
        const Verdict& v = report.verdicts[i].verdict;
        html += "  <div class=\"chart-row\"><span class=\"chart-idx\">" + std::to_string(i + 1) +
                "</span><div class=\"chart-track\">";
        if (v.is_judged()) {
            html += "<div class=\"chart-bar\" style=\"width:" + std::to_string(v.score) + "%\"></div>";
        } else {
            html += "<div class=\"chart-bar excluded\"></div>";
        }
        html += "</div><span class=\"chart-val\">";
        html += v.is_judged() ? std::to_string(v.score) + "%" : "&mdash;";
        html += "</span></div>\n";
    }
    html += "</section>\n";

    html += "<section class=\"sentences\">\n";
    for (std::size_t i = 0; i < report.sentences.size(); ++i) {
        const Sentence& s = report.sentences[i];
        const Verdict& v = report.verdicts[i].verdict;
        html += "<article class=\"sentence\">\n";
        html += "  <div class=\"meta\">#" + std::to_string(i + 1) + " &middot; ";
        if (v.is_judged())
            html += std::to_string(v.score) + "% (" + std::string(label_name(v.label)) + ")";
        else if (v.outcome == Outcome::NonVerifiable)
            html += "not verifiable";
        else
            html += "unable to judge";
        html += "</div>\n";
        static const std::vector<CharRange> kNoMarks;
        std::string body = detail::render_sentence_body(
            s.text, i < report.marks.size() ? report.marks[i] : kNoMarks);
        if (v.is_judged() && v.score == 0) body = "<span class=\"s0\">" + body + "</span>";
        const bool muted = v.outcome == Outcome::NonVerifiable;
        html += std::string("  <p class=\"text") + (muted ? " nv" : "") + "\">" + body + "</p>\n";
        if (!v.reason.empty())
            html += "  <p class=\"reason\">" + detail::html_escape(v.reason) + "</p>\n";
        html += "</article>\n";
    }
    html += "</section>\n";

    if (!report.warnings.empty()) {
        html += "<section class=\"warnings\">\n<ul>\n";
        for (const std::string& w : report.warnings)
            html += "  <li>" + detail::html_escape(w) + "</li>\n";
        html += "</ul>\n</section>\n";
    }
    html += "</main>\n</body>\n</html>\n";
    return html;
}

/// Plain-text verdict block, shared by the CLI and the bot.
inline std::string format_verdict_text(const Verdict& v) {
    switch (v.outcome) {
        case Outcome::NonVerifiable:
            return "Not verifiable: the statement is not objective or checkable.";
        case Outcome::UnableToJudge:
            return "Unable to judge this statement.";
        case Outcome::Judged:
            break;
    }
    std::string out = "Veracity score: " + std::to_string(v.score) + "% (" +
                      std::string(label_name(v.label)) + ")\n";
    out += "False part: " + (v.false_part ? v.false_part->text : std::string("—")) + "\n";
    out += "Reason: " + (v.reason.empty() ? std::string("—") : v.reason);
    return out;
}

}  // namespace verity
