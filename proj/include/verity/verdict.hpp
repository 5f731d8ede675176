#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "verity/unicode.hpp"

namespace verity {

/// Ordered by truthfulness: False < MostlyFalse < MostlyTrue < True.
enum class VeracityLabel { False, MostlyFalse, MostlyTrue, True };

enum class Strategy { FewShot, Agent };

inline std::string_view strategy_slug(Strategy s) {
    return s == Strategy::FewShot ? "fewshot" : "agent";
}

inline std::optional<Strategy> strategy_from_slug(std::string_view s) {
    if (s == "fewshot") return Strategy::FewShot;
    if (s == "agent") return Strategy::Agent;
    return std::nullopt;
}

/// Anchor score for each label: True 100, Mostly True 80, Mostly False 30, False 0.
inline int anchor_score(VeracityLabel label) {
    switch (label) {
        case VeracityLabel::True: return 100;
        case VeracityLabel::MostlyTrue: return 80;
        case VeracityLabel::MostlyFalse: return 30;
        case VeracityLabel::False: return 0;
    }
    return 0;
}

inline std::string_view label_name(VeracityLabel label) {
    switch (label) {
        case VeracityLabel::True: return "True";
        case VeracityLabel::MostlyTrue: return "Mostly True";
        case VeracityLabel::MostlyFalse: return "Mostly False";
        case VeracityLabel::False: return "False";
    }
    return "False";
}

inline std::string_view label_slug(VeracityLabel label) {
    switch (label) {
        case VeracityLabel::True: return "true";
        case VeracityLabel::MostlyTrue: return "mostly-true";
        case VeracityLabel::MostlyFalse: return "mostly-false";
        case VeracityLabel::False: return "false";
    }
    return "false";
}

/// Accepts "Mostly True", "mostly-true", "MOSTLY_TRUE" and the like.
inline std::optional<VeracityLabel> label_from_text(std::string_view text) {
    std::string key;
    key.reserve(text.size());
    for (char c : trim_view(text)) {
        if (c == ' ' || c == '_' || c == '-') continue;
        key.push_back(ascii_lower(c));
    }
    if (key == "true") return VeracityLabel::True;
    if (key == "mostlytrue") return VeracityLabel::MostlyTrue;
    if (key == "mostlyfalse") return VeracityLabel::MostlyFalse;
    if (key == "false") return VeracityLabel::False;
    return std::nullopt;
}

/// Score bands: [0,15] False, (15,49] Mostly False, (49,85] Mostly True,
/// (85,100] True. Each anchor score falls strictly inside its band.
inline VeracityLabel label_from_score(int score) {
    if (score < 0 || score > 100) throw std::domain_error("veracity score out of range: " + std::to_string(score));
    if (score <= 15) return VeracityLabel::False;
    if (score <= 49) return VeracityLabel::MostlyFalse;
    if (score <= 85) return VeracityLabel::MostlyTrue;
    return VeracityLabel::True;
}

/// The phrase inside the judged statement identified as incorrect or ambiguous.
struct FalsePart {
    std::string text;
    std::optional<CharRange> span;  // into the judged sentence, scalar offsets

    bool operator==(const FalsePart&) const = default;
};

enum class Outcome { Judged, NonVerifiable, UnableToJudge };

inline std::string_view outcome_slug(Outcome o) {
    switch (o) {
        case Outcome::Judged: return "judged";
        case Outcome::NonVerifiable: return "non-verifiable";
        case Outcome::UnableToJudge: return "unable-to-judge";
    }
    return "unable-to-judge";
}

struct Verdict {
    Outcome outcome = Outcome::UnableToJudge;
    int score = 0;                       // meaningful when Judged
    VeracityLabel label = VeracityLabel::False;
    std::optional<FalsePart> false_part;
    std::string reason;

    static Verdict judged(int score, std::optional<FalsePart> false_part = std::nullopt,
                          std::string reason = {}) {
        Verdict v;
        v.outcome = Outcome::Judged;
        v.score = score;
        v.label = label_from_score(score);
        v.false_part = std::move(false_part);
        v.reason = std::move(reason);
        return v;
    }

    static Verdict non_verifiable() {
        Verdict v;
        v.outcome = Outcome::NonVerifiable;
        return v;
    }

    static Verdict unable(std::string reason = {}) {
        Verdict v;
        v.outcome = Outcome::UnableToJudge;
        v.reason = std::move(reason);
        return v;
    }

    bool is_judged() const { return outcome == Outcome::Judged; }

    bool operator==(const Verdict&) const = default;
};

struct SentenceVerdict {
    std::size_t sentence_index = 0;
    Verdict verdict;

    bool operator==(const SentenceVerdict&) const = default;
};

/// Aggregate over all judged sentences of a document, plus the running
/// prefix series ("the content heard up to that point").
struct GlobalScore {
    std::size_t judged_count = 0;
    std::size_t excluded_count = 0;               // NonVerifiable + UnableToJudge
    std::optional<int> mean_percent;              // absent iff judged_count == 0
    std::vector<std::optional<int>> prefix_series;  // one entry per sentence

    bool operator==(const GlobalScore&) const = default;
};

/// Unweighted mean of judged scores, rounded half-up at the final step.
inline int mean_percent_half_up(std::int64_t sum, std::int64_t count) {
    return static_cast<int>((2 * sum + count) / (2 * count));
}

inline GlobalScore global_score(const std::vector<SentenceVerdict>& verdicts) {
    GlobalScore g;
    g.prefix_series.reserve(verdicts.size());
    std::int64_t sum = 0;
    for (const SentenceVerdict& sv : verdicts) {
        if (sv.verdict.is_judged()) {
            ++g.judged_count;
            sum += sv.verdict.score;
        } else {
            ++g.excluded_count;
        }
        if (g.judged_count == 0) {
            g.prefix_series.emplace_back(std::nullopt);
        } else {
            g.prefix_series.emplace_back(mean_percent_half_up(sum, static_cast<std::int64_t>(g.judged_count)));
        }
    }
    if (g.judged_count > 0) g.mean_percent = g.prefix_series.back();
    return g;
}

inline std::vector<std::optional<int>> prefix_scores(const std::vector<SentenceVerdict>& verdicts) {
    return global_score(verdicts).prefix_series;
}

}  // namespace verity
