#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "verity/report.hpp"

namespace verity {

/// PolitiFact-style truth tiers. "barely-true" is the same tier as
/// "mostly-false"; both sides of that synonym pair are kept distinct in the
/// data and merged by the correctness rules.
enum class GroundLabel { True, MostlyTrue, HalfTrue, BarelyTrue, MostlyFalse, False, PantsFire };

inline std::string_view ground_label_slug(GroundLabel g) {
    switch (g) {
        case GroundLabel::True: return "true";
        case GroundLabel::MostlyTrue: return "mostly-true";
        case GroundLabel::HalfTrue: return "half-true";
        case GroundLabel::BarelyTrue: return "barely-true";
        case GroundLabel::MostlyFalse: return "mostly-false";
        case GroundLabel::False: return "false";
        case GroundLabel::PantsFire: return "pants-fire";
    }
    return "false";
}

inline std::optional<GroundLabel> ground_label_from_text(std::string_view text) {
    std::string key;
    for (const char c : trim_view(text)) {
        if (c == ' ' || c == '_' || c == '-') continue;
        key.push_back(ascii_lower(c));
    }
    if (key == "true") return GroundLabel::True;
    if (key == "mostlytrue") return GroundLabel::MostlyTrue;
    if (key == "halftrue") return GroundLabel::HalfTrue;
    if (key == "barelytrue") return GroundLabel::BarelyTrue;
    if (key == "mostlyfalse") return GroundLabel::MostlyFalse;
    if (key == "false") return GroundLabel::False;
    if (key == "pantsfire" || key == "pantsonfire") return GroundLabel::PantsFire;
    return std::nullopt;
}

struct LabeledStatement {
    std::string id;
    std::string statement;
    GroundLabel ground_label = GroundLabel::False;

    bool operator==(const LabeledStatement&) const = default;
};

struct Dataset {
    std::vector<LabeledStatement> items;
    std::vector<std::string> warnings;
};

enum class DatasetFormat { Csv, Jsonl };

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// RFC 4180-style rows: quoted fields, "" escapes, commas/newlines inside
/// quotes.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    const auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    const auto end_row = [&] {
        end_field();
        const bool blank = row.size() == 1 && row[0].empty();
        if (!blank) rows.push_back(std::move(row));
        row.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (!field.empty() && field.back() == '\r') field.pop_back();
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open dataset: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace detail

/// Loads a labeled dataset. Required columns/keys: id, statement, label.
/// Unknown labels are skipped with a warning; a missing column or an empty
/// result is fatal.
inline Dataset load_dataset(const std::string& path, DatasetFormat format) {
    Dataset out;
    const std::string text = detail::read_file(path);
    const auto add = [&](std::string id, std::string statement, const std::string& label,
                         std::size_t line_no) {
        if (trim_view(statement).empty()) {
            out.warnings.push_back("row " + std::to_string(line_no) + ": empty statement skipped");
            return;
        }
        const auto ground = ground_label_from_text(label);
        if (!ground) {
            out.warnings.push_back("row " + std::to_string(line_no) + ": unknown label \"" + label +
                                   "\" skipped");
            return;
        }
        out.items.push_back({std::move(id), std::move(statement), *ground});
    };

    if (format == DatasetFormat::Csv) {
        const auto rows = detail::parse_csv(text);
        if (rows.empty()) throw DatasetError("dataset has no header row");
        std::size_t id_col = rows[0].size(), stmt_col = rows[0].size(), label_col = rows[0].size();
        for (std::size_t c = 0; c < rows[0].size(); ++c) {
            const std::string name = ascii_lower_copy(trim_view(rows[0][c]));
            if (name == "id") id_col = c;
            else if (name == "statement") stmt_col = c;
            else if (name == "label") label_col = c;
        }
        if (id_col >= rows[0].size() || stmt_col >= rows[0].size() || label_col >= rows[0].size())
            throw DatasetError("dataset is missing a required column (id, statement, label)");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            const std::size_t width = std::max({id_col, stmt_col, label_col}) + 1;
            if (row.size() < width) {
                out.warnings.push_back("row " + std::to_string(r + 1) + ": too few fields, skipped");
                continue;
            }
            add(row[id_col], row[stmt_col], trim_copy(row[label_col]), r + 1);
        }
    } else {
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = std::min(text.find('\n', pos), text.size());
            const std::string_view line = trim_view(std::string_view(text).substr(pos, eol - pos));
            ++line_no;
            pos = eol + 1;
            if (line.empty()) {
                if (eol >= text.size()) break;
                continue;
            }
            try {
                const nlohmann::json j = nlohmann::json::parse(line);
                if (!j.contains("id") || !j.contains("statement") || !j.contains("label"))
                    throw DatasetError("dataset line " + std::to_string(line_no) +
                                       " is missing a required key (id, statement, label)");
                add(j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump(),
                    j["statement"].get<std::string>(), j["label"].get<std::string>(), line_no);
            } catch (const nlohmann::json::exception& e) {
                throw DatasetError("dataset line " + std::to_string(line_no) + ": " + e.what());
            }
            if (eol >= text.size()) break;
        }
    }
    if (out.items.empty()) throw DatasetError("dataset contains no usable rows");
    return out;
}

// ---------------------------------------------------------------------------
// Correctness and accuracy
// ---------------------------------------------------------------------------

enum class Correctness { Correct, Wrong, Unable };

inline std::string_view correctness_slug(Correctness c) {
    switch (c) {
        case Correctness::Correct: return "correct";
        case Correctness::Wrong: return "wrong";
        case Correctness::Unable: return "unable";
    }
    return "unable";
}

enum class MatchMode { Polarity, Coarse };

inline bool ground_truthful(GroundLabel g, bool half_true_truthful) {
    switch (g) {
        case GroundLabel::True:
        case GroundLabel::MostlyTrue: return true;
        case GroundLabel::HalfTrue: return half_true_truthful;
        default: return false;
    }
}

inline VeracityLabel coarse_ground(GroundLabel g) {
    switch (g) {
        case GroundLabel::True: return VeracityLabel::True;
        case GroundLabel::MostlyTrue:
        case GroundLabel::HalfTrue: return VeracityLabel::MostlyTrue;
        case GroundLabel::BarelyTrue:
        case GroundLabel::MostlyFalse: return VeracityLabel::MostlyFalse;
        case GroundLabel::False:
        case GroundLabel::PantsFire: return VeracityLabel::False;
    }
    return VeracityLabel::False;
}

/// Polarity mode compares truth sides (predicted truthful iff score >= 50);
/// coarse mode compares four-way labels. Non-verifiable / unable-to-judge
/// verdicts are excluded from the accuracy denominator.
inline Correctness judge_correctness(const Verdict& verdict, GroundLabel ground, MatchMode mode,
                                     bool half_true_truthful = true) {
    if (!verdict.is_judged()) return Correctness::Unable;
    if (mode == MatchMode::Polarity) {
        const bool predicted = verdict.score >= 50;
        return predicted == ground_truthful(ground, half_true_truthful) ? Correctness::Correct
                                                                        : Correctness::Wrong;
    }
    return label_from_score(verdict.score) == coarse_ground(ground) ? Correctness::Correct
                                                                    : Correctness::Wrong;
}

struct EvalSummary {
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t wrong = 0;
    std::size_t unable = 0;
    std::optional<int> accuracy_percent;  // absent when correct + wrong == 0

    bool operator==(const EvalSummary&) const = default;
};

/// Accuracy = correct / (correct + wrong), rounded half-up to a percent.
inline std::optional<int> accuracy_percent_of(std::size_t correct, std::size_t wrong) {
    const std::size_t denom = correct + wrong;
    if (denom == 0) return std::nullopt;
    return static_cast<int>((200 * correct + denom) / (2 * denom));
}

inline EvalSummary summarize(const std::vector<Correctness>& outcomes) {
    EvalSummary s;
    s.total = outcomes.size();
    for (const Correctness c : outcomes) {
        if (c == Correctness::Correct) ++s.correct;
        else if (c == Correctness::Wrong) ++s.wrong;
        else ++s.unable;
    }
    s.accuracy_percent = accuracy_percent_of(s.correct, s.wrong);
    return s;
}

struct EvalRecord {
    LabeledStatement item;
    std::string raw_answer;
    std::optional<Verdict> verdict;
    Correctness correctness = Correctness::Unable;
    std::vector<std::string> warnings;
};

struct EvalRun {
    EvalSummary summary;
    std::vector<EvalRecord> records;
};

struct EvalOptions {
    Strategy strategy = Strategy::FewShot;
    MatchMode mode = MatchMode::Polarity;
    bool half_true_truthful = true;
    int concurrency = 4;
    std::string model_id = "gpt-4";
    double temperature = 0.0;
    int max_steps = 5;
    const PromptBundle* bundle = nullptr;
};

/// Judges every statement once. Per-item failures become Unable with a
/// warning; only dataset-level errors are fatal.
inline EvalRun run_eval(const Dataset& dataset, ModelBackend& model, SearchBackend* search,
                        const EvalOptions& options = {}) {
    if (options.strategy == Strategy::Agent && search == nullptr)
        throw std::invalid_argument("agent strategy requires a search backend");
    const PromptBundle& bundle = options.bundle ? *options.bundle : default_bundle();

    EvalRun run;
    run.records.resize(dataset.items.size());
    detail::bounded_parallel_for(dataset.items.size(), options.concurrency, [&](std::size_t i) {
        EvalRecord& rec = run.records[i];
        rec.item = dataset.items[i];
        try {
            if (options.strategy == Strategy::FewShot) {
                rec.raw_answer = model.complete(ModelRequest::for_prompt(
                    build_fewshot_prompt(rec.item.statement, bundle), options.model_id,
                    options.temperature));
                rec.verdict = parse_verdict({rec.raw_answer, Strategy::FewShot}, &rec.warnings);
            } else {
                AgentOptions agent_options;
                agent_options.max_steps = options.max_steps;
                agent_options.model_id = options.model_id;
                agent_options.temperature = options.temperature;
                agent_options.bundle = &bundle;
                auto [verdict, trace] =
                    verify_with_agent(rec.item.statement, model, *search, agent_options, &rec.warnings);
                rec.raw_answer = trace.final_raw;
                rec.verdict = std::move(verdict);
            }
            rec.correctness = judge_correctness(*rec.verdict, rec.item.ground_label, options.mode,
                                                options.half_true_truthful);
        } catch (const ParseError& e) {
            rec.raw_answer = e.raw_text;
            rec.warnings.push_back("unparseable answer, counted as unable");
            rec.correctness = Correctness::Unable;
        } catch (const AgentError& e) {
            rec.raw_answer = e.trace.final_raw;
            rec.warnings.push_back(std::string(e.what()) + ", counted as unable");
            rec.correctness = Correctness::Unable;
        } catch (const ProviderError& e) {
            rec.warnings.push_back(std::string(e.what()) + ", counted as unable");
            rec.correctness = Correctness::Unable;
        }
    });

    std::vector<Correctness> outcomes;
    outcomes.reserve(run.records.size());
    for (const EvalRecord& rec : run.records) outcomes.push_back(rec.correctness);
    run.summary = summarize(outcomes);
    return run;
}

/// Table-shaped one-liner: totals plus accuracy.
inline std::string format_summary_row(const EvalSummary& s) {
    std::string out = "total " + std::to_string(s.total) + "  correct " + std::to_string(s.correct) +
                      "  wrong " + std::to_string(s.wrong) + "  unable " + std::to_string(s.unable) +
                      "  accuracy ";
    out += s.accuracy_percent ? std::to_string(*s.accuracy_percent) + "%" : "n/a";
    return out;
}

inline std::string summary_to_json(const EvalSummary& s, Strategy strategy, MatchMode mode) {
    ordered_json j;
    j["total"] = s.total;
    j["correct"] = s.correct;
    j["wrong"] = s.wrong;
    j["unable"] = s.unable;
    if (s.accuracy_percent) j["accuracy_percent"] = *s.accuracy_percent;
    j["strategy"] = std::string(strategy_slug(strategy));
    j["mode"] = mode == MatchMode::Polarity ? "polarity" : "coarse";
    return j.dump(2) + "\n";
}

/// Per-item audit records, one JSON object per line.
inline std::string records_to_jsonl(const std::vector<EvalRecord>& records) {
    std::string out;
    for (const EvalRecord& rec : records) {
        ordered_json j;
        j["id"] = rec.item.id;
        j["statement"] = rec.item.statement;
        j["ground_label"] = std::string(ground_label_slug(rec.item.ground_label));
        j["raw_answer"] = rec.raw_answer;
        if (rec.verdict) j["verdict"] = verdict_to_json(*rec.verdict);
        j["correctness"] = std::string(correctness_slug(rec.correctness));
        if (!rec.warnings.empty()) j["warnings"] = rec.warnings;
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace verity
