#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "verity/unicode.hpp"
#include "verity/verdict.hpp"

namespace verity {

struct RawAnswer {
    std::string text;
    Strategy strategy = Strategy::FewShot;
};

/// Raised when a model answer matches neither the score grammar nor the
/// null / unable-to-judge sentinels. Keeps the raw text for audit.
struct ParseError : std::runtime_error {
    std::string raw_text;

    explicit ParseError(std::string raw)
        : std::runtime_error("answer does not match the verdict grammar"), raw_text(std::move(raw)) {}
};

namespace detail {

inline std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0) {
    if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        bool hit = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (ascii_lower(haystack[i + k]) != ascii_lower(needle[k])) { hit = false; break; }
        }
        if (hit) return i;
    }
    return std::string_view::npos;
}

/// Removes surrounding markdown fences and outer blank lines.
inline std::string_view strip_decorations(std::string_view text) {
    std::string_view s = trim_view(text);
    if (s.rfind("```", 0) == 0) {
        std::size_t eol = s.find('\n');
        if (eol != std::string_view::npos) {
            std::string_view rest = s.substr(eol + 1);
            const std::size_t close = rest.rfind("```");
            if (close != std::string_view::npos) s = rest.substr(0, close);
        }
    }
    return trim_view(s);
}

inline std::string_view strip_quotes(std::string_view s) {
    s = trim_view(s);
    if (s.size() >= 2 &&
        ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return trim_view(s.substr(1, s.size() - 2));
    return s;
}

}  // namespace detail

/// Parses a raw model answer against the verdict grammar:
///   [output:] Veracity score: INT% (LABEL), False Part: PHRASE [Reason: ...]
/// "/" or an empty phrase means no false part; the literal answer "null"
/// means NonVerifiable; an answer whose substance is "Unable to judge" maps
/// to UnableToJudge. When the stated label disagrees with the score band,
/// the score wins and a warning is appended to `warnings`.
inline Verdict parse_verdict(const RawAnswer& raw, std::vector<std::string>* warnings = nullptr) {
    const auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };
    std::string_view s = detail::strip_decorations(raw.text);
    if (detail::find_ci(s, "output:") == 0) s = trim_view(s.substr(7));
    else if (detail::find_ci(s, "output") == 0 && s.size() == 6) s = s.substr(6);

    const std::size_t score_kw = detail::find_ci(s, "veracity score");
    if (score_kw == std::string_view::npos) {
        std::string_view settled = s;
        if (!settled.empty() && settled.back() == '.') settled.remove_suffix(1);
        std::string folded = ascii_lower_copy(trim_view(settled));
        if (folded == "null") return Verdict::non_verifiable();
        if (detail::find_ci(s, "unable to judge") != std::string_view::npos)
            return Verdict::unable(trim_copy(s));
        throw ParseError(raw.text);
    }

    std::size_t i = score_kw + 14;
    while (i < s.size() && (s[i] == ':' || s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t digits_end = i;
    while (digits_end < s.size() && s[digits_end] >= '0' && s[digits_end] <= '9') ++digits_end;
    if (digits_end == i) throw ParseError(raw.text);
    int score = 0;
    for (std::size_t k = i; k < digits_end; ++k) {
        score = score * 10 + (s[k] - '0');
        if (score > 1000) break;
    }
    i = digits_end;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i < s.size() && s[i] == '%') ++i;
    if (score < 0 || score > 100) throw ParseError(raw.text);

    const VeracityLabel computed = label_from_score(score);
    VeracityLabel label = computed;
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i < s.size() && s[i] == '(') {
        const std::size_t close = s.find(')', i);
        if (close != std::string_view::npos) {
            const std::string_view stated_text = s.substr(i + 1, close - i - 1);
            if (const auto stated = label_from_text(stated_text)) {
                if (*stated != computed)
                    warn("stated label \"" + std::string(trim_view(stated_text)) +
                         "\" conflicts with score " + std::to_string(score) + "; score wins");
            } else {
                warn("unrecognized label \"" + trim_copy(stated_text) + "\"; derived from score");
            }
            i = close + 1;
        }
    }

    std::optional<FalsePart> false_part;
    std::string reason;
    const std::size_t fp_kw = detail::find_ci(s, "false part", i);
    if (fp_kw != std::string_view::npos) {
        std::size_t p = fp_kw + 10;
        while (p < s.size() && (s[p] == ':' || s[p] == ' ' || s[p] == '\t')) ++p;
        std::size_t line_end = s.find('\n', p);
        if (line_end == std::string_view::npos) line_end = s.size();
        std::string_view phrase = s.substr(p, line_end - p);
        std::size_t reason_kw = detail::find_ci(s, "reason:", p);
        if (reason_kw != std::string_view::npos) {
            std::size_t r = reason_kw + 7;
            while (r < s.size() && (s[r] == ' ' || s[r] == '\t')) ++r;
            reason = trim_copy(s.substr(r));
            if (reason_kw < line_end) {
                phrase = s.substr(p, reason_kw - p);
                // Drop the separator that led into "Reason:".
                while (!phrase.empty() && (phrase.back() == ' ' || phrase.back() == ',' ||
                                           phrase.back() == ';' || phrase.back() == '.'))
                    phrase.remove_suffix(1);
            }
        } else if (line_end < s.size()) {
            reason = trim_copy(s.substr(line_end + 1));
        }
        phrase = detail::strip_quotes(phrase);
        if (!phrase.empty() && phrase != "/")
            false_part = FalsePart{std::string(phrase), std::nullopt};
    } else {
        // Tolerated deviation: no false-part section at all.
        std::size_t reason_kw = detail::find_ci(s, "reason:", i);
        if (reason_kw != std::string_view::npos) {
            std::size_t r = reason_kw + 7;
            while (r < s.size() && (s[r] == ' ' || s[r] == '\t')) ++r;
            reason = trim_copy(s.substr(r));
        }
    }

    Verdict v = Verdict::judged(score, std::move(false_part), std::move(reason));
    v.label = label;
    return v;
}

// ---------------------------------------------------------------------------
// False-part location
// ---------------------------------------------------------------------------

namespace detail {

inline std::u32string fold_case(const std::u32string& s) {
    std::u32string out = s;
    for (char32_t& cp : out) cp = ascii_lower_cp(cp);
    return out;
}

/// Whitespace-normalized view: collapsed to single spaces, with a map from
/// each normalized position back to the original codepoint index.
struct NormView {
    std::u32string text;
    std::vector<std::size_t> origin;
};

inline NormView normalize_ws(const std::u32string& s) {
    NormView v;
    bool pending = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (is_space_cp(s[i])) { pending = !v.text.empty(); continue; }
        if (pending) {
            v.text.push_back(U' ');
            v.origin.push_back(i);  // position of the char after the gap
            pending = false;
        }
        v.text.push_back(ascii_lower_cp(s[i]));
        v.origin.push_back(i);
    }
    return v;
}

inline bool is_word_cp(char32_t cp) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
           (cp >= U'0' && cp <= U'9') || cp > 0x7F;
}

struct Token {
    std::u32string text;  // folded
    std::size_t begin = 0;
    std::size_t end = 0;  // codepoint range in the source
};

inline std::vector<Token> tokenize(const std::u32string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_word_cp(s[i])) { ++i; continue; }
        std::size_t j = i;
        std::u32string word;
        while (j < s.size() && is_word_cp(s[j])) {
            word.push_back(ascii_lower_cp(s[j]));
            ++j;
        }
        out.push_back({std::move(word), i, j});
        i = j;
    }
    return out;
}

}  // namespace detail

/// Finds the phrase inside the sentence, trying exact, case-insensitive,
/// whitespace-normalized, then token-level matching (longest common run,
/// accepted when it covers >= 80% of the phrase tokens). Returns the range
/// in scalar values, or nullopt when nothing credible matches.
inline std::optional<CharRange> locate_false_part(std::string_view sentence, std::string_view phrase) {
    if (trim_view(phrase).empty()) return std::nullopt;
    const std::u32string sent = utf8::decode(sentence).codepoints;
    const std::u32string phr = utf8::decode(std::string_view(trim_view(phrase))).codepoints;
    if (phr.empty() || sent.empty()) return std::nullopt;

    // Tier 1: exact substring.
    if (const std::size_t pos = sent.find(phr); pos != std::u32string::npos)
        return CharRange{pos, pos + phr.size()};

    // Tier 2: ASCII case-insensitive.
    const std::u32string sent_folded = detail::fold_case(sent);
    const std::u32string phr_folded = detail::fold_case(phr);
    if (const std::size_t pos = sent_folded.find(phr_folded); pos != std::u32string::npos)
        return CharRange{pos, pos + phr.size()};

    // Tier 3: whitespace-normalized (and folded).
    const detail::NormView sent_norm = detail::normalize_ws(sent);
    const detail::NormView phr_norm = detail::normalize_ws(phr);
    if (!phr_norm.text.empty()) {
        if (const std::size_t pos = sent_norm.text.find(phr_norm.text); pos != std::u32string::npos) {
            const std::size_t begin = sent_norm.origin[pos];
            const std::size_t last = sent_norm.origin[pos + phr_norm.text.size() - 1];
            return CharRange{begin, last + 1};
        }
    }

    // Tier 4: longest common contiguous token run.
    const std::vector<detail::Token> st = detail::tokenize(sent);
    const std::vector<detail::Token> pt = detail::tokenize(phr);
    if (pt.empty() || st.empty()) return std::nullopt;
    std::size_t best_len = 0, best_si = 0;
    std::vector<std::vector<std::size_t>> run(st.size() + 1, std::vector<std::size_t>(pt.size() + 1, 0));
    for (std::size_t a = 1; a <= st.size(); ++a) {
        for (std::size_t b = 1; b <= pt.size(); ++b) {
            if (st[a - 1].text == pt[b - 1].text) {
                run[a][b] = run[a - 1][b - 1] + 1;
                if (run[a][b] > best_len) {
                    best_len = run[a][b];
                    best_si = a - run[a][b];
                }
            }
        }
    }
    if (best_len * 5 >= pt.size() * 4) {  // >= 80% of phrase tokens
        return CharRange{st[best_si].begin, st[best_si + best_len - 1].end};
    }
    return std::nullopt;
}

/// Underline spans for rendering. A comma-separated phrase is split into
/// fragments only when every fragment independently locates; otherwise the
/// phrase is treated as one. Overlapping spans are merged left-to-right.
inline std::vector<CharRange> locate_false_parts(std::string_view sentence, std::string_view phrase) {
    std::vector<std::string> fragments;
    std::string_view rest = phrase;
    std::size_t pos;
    while ((pos = rest.find(", ")) != std::string_view::npos) {
        fragments.emplace_back(trim_view(rest.substr(0, pos)));
        rest = rest.substr(pos + 2);
    }
    fragments.emplace_back(trim_view(rest));

    std::vector<CharRange> ranges;
    if (fragments.size() > 1) {
        bool all = true;
        for (const std::string& frag : fragments) {
            const auto r = locate_false_part(sentence, frag);
            if (!r) { all = false; break; }
            ranges.push_back(*r);
        }
        if (!all) ranges.clear();
    }
    if (ranges.empty()) {
        if (const auto r = locate_false_part(sentence, phrase)) ranges.push_back(*r);
    }
    std::sort(ranges.begin(), ranges.end(),
              [](const CharRange& a, const CharRange& b) { return a.begin < b.begin; });
    std::vector<CharRange> merged;
    for (const CharRange& r : ranges) {
        if (!merged.empty() && r.begin < merged.back().end)
            merged.back().end = std::max(merged.back().end, r.end);
        else
            merged.push_back(r);
    }
    return merged;
}

}  // namespace verity
