#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "verity/unicode.hpp"

namespace verity {

/// One unit of veracity judgment: text plus its scalar-value range in the
/// extracted document text.
struct Sentence {
    std::size_t index = 0;
    std::string text;
    CharRange range;

    bool operator==(const Sentence&) const = default;
};

struct SegmentOptions {
    /// Lowercased tokens ending in '.', e.g. "dr.", "u.s.". A terminator that
    /// closes one of these never ends a sentence.
    std::unordered_set<std::string> abbreviations;
    std::size_t max_sentence_len = 1000;  // scalar values; forces a split

    SegmentOptions();
};

inline const std::unordered_set<std::string>& default_abbreviations() {
    static const std::unordered_set<std::string> kDefaults = {
        "dr.", "mr.", "mrs.", "ms.", "prof.", "e.g.", "i.e.", "etc.", "vs.", "u.s.",
    };
    return kDefaults;
}

inline SegmentOptions::SegmentOptions() : abbreviations(default_abbreviations()) {}

/// Abbreviation list file: one token per line, '#' starts a comment.
/// Tokens are lowercased; a trailing '.' is appended when missing.
inline std::unordered_set<std::string> load_abbreviations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open abbreviation list: " + path);
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (const std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string token = trim_copy(line);
        if (token.empty()) continue;
        for (char& c : token) c = ascii_lower(c);
        if (token.back() != '.') token.push_back('.');
        out.insert(std::move(token));
    }
    return out;
}

namespace detail {

inline bool is_terminator(char32_t cp) {
    return cp == U'.' || cp == U'!' || cp == U'?' || cp == U'…';
}

inline bool is_cjk_terminator(char32_t cp) {
    return cp == U'。' || cp == U'！' || cp == U'？';
}

inline bool is_closing_mark(char32_t cp) {
    switch (cp) {
        case U'"': case U'\'': case U')': case U']':
        case U'”': case U'’': case U'»': case U'›':
        case U'」': case U'』': case U'）':
            return true;
        default:
            return false;
    }
}

inline bool is_opening_mark(char32_t cp) {
    switch (cp) {
        case U'"': case U'\'': case U'(': case U'[':
        case U'“': case U'‘': case U'«': case U'‹':
        case U'「': case U'『': case U'（':
            return true;
        default:
            return false;
    }
}

inline bool is_uppercase_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return true;
    return cp >= 0xC0 && cp <= 0xDE && cp != 0xD7;  // Latin-1 capitals
}

/// The whitespace run starting at i contains a second newline, i.e. a blank line.
inline bool blank_line_at(const std::u32string& cps, std::size_t i) {
    if (i >= cps.size() || cps[i] != U'\n') return false;
    for (std::size_t k = i + 1; k < cps.size() && is_space_cp(cps[k]); ++k)
        if (cps[k] == U'\n') return true;
    return false;
}

}  // namespace detail

/// Splits normalized text into sentences. Boundaries fall after a terminator
/// (. ! ? …) whose trailing closing quotes/brackets have been attached, when
/// followed by whitespace and an uppercase letter or opening quote; at blank
/// lines; and unconditionally after CJK terminators. The abbreviation list
/// suppresses false splits after tokens like "Dr.".
inline std::vector<Sentence> split_sentences(std::string_view text, const SegmentOptions& options = {}) {
    const utf8::Decoded decoded = utf8::decode(text);
    const std::u32string& cps = decoded.codepoints;
    const std::size_t n = cps.size();

    std::vector<Sentence> sentences;
    const auto emit = [&](std::size_t begin, std::size_t end) {
        while (begin < end && is_space_cp(cps[begin])) ++begin;
        while (end > begin && is_space_cp(cps[end - 1])) --end;
        if (begin >= end) return;
        // Hard cap: force a split at the last whitespace before the limit.
        while (end - begin > options.max_sentence_len) {
            std::size_t cut = begin + options.max_sentence_len;
            std::size_t ws = cut;
            while (ws > begin && !is_space_cp(cps[ws - 1])) --ws;
            if (ws == begin) ws = cut;  // no whitespace in window: cut mid-token
            std::size_t piece_end = ws;
            while (piece_end > begin && is_space_cp(cps[piece_end - 1])) --piece_end;
            if (piece_end > begin) {
                const std::size_t b = decoded.byte_offsets[begin];
                const std::size_t e = decoded.byte_offsets[piece_end];
                sentences.push_back({sentences.size(), std::string(text.substr(b, e - b)), {begin, piece_end}});
            }
            begin = ws;
            while (begin < end && is_space_cp(cps[begin])) ++begin;
        }
        if (begin >= end) return;
        const std::size_t b = decoded.byte_offsets[begin];
        const std::size_t e = decoded.byte_offsets[end];
        sentences.push_back({sentences.size(), std::string(text.substr(b, e - b)), {begin, end}});
    };

    const auto abbreviation_before = [&](std::size_t dot) {
        // Token = run of non-whitespace ending at the '.', minus leading
        // opening punctuation; lowercased ASCII for the lookup.
        std::size_t start = dot;
        while (start > 0 && !is_space_cp(cps[start - 1])) --start;
        while (start < dot && detail::is_opening_mark(cps[start])) ++start;
        std::string token;
        for (std::size_t k = start; k <= dot; ++k) {
            const char32_t cp = ascii_lower_cp(cps[k]);
            if (cp > 0x7F) return false;
            token.push_back(static_cast<char>(cp));
        }
        return options.abbreviations.count(token) > 0;
    };

    std::size_t start = 0;
    std::size_t i = 0;
    while (i < n) {
        const char32_t cp = cps[i];
        if (detail::blank_line_at(cps, i)) {
            emit(start, i);
            while (i < n && is_space_cp(cps[i])) ++i;
            start = i;
            continue;
        }
        if (detail::is_cjk_terminator(cp)) {
            std::size_t j = i + 1;
            while (j < n && detail::is_closing_mark(cps[j])) ++j;
            emit(start, j);
            start = j;
            i = j;
            continue;
        }
        if (detail::is_terminator(cp)) {
            std::size_t j = i + 1;
            while (j < n && detail::is_terminator(cps[j])) ++j;  // "?!", "..."
            const std::size_t last_term = j - 1;
            while (j < n && detail::is_closing_mark(cps[j])) ++j;
            bool boundary;
            if (j >= n) {
                boundary = true;
            } else if (!is_space_cp(cps[j])) {
                boundary = false;
            } else {
                std::size_t k = j;
                while (k < n && is_space_cp(cps[k])) ++k;
                boundary = k >= n || detail::is_uppercase_cp(cps[k]) || detail::is_opening_mark(cps[k]);
            }
            if (boundary && cps[last_term] == U'.' && abbreviation_before(last_term)) boundary = false;
            if (boundary) {
                emit(start, j);
                start = j;
            }
            i = j;
            continue;
        }
        ++i;
    }
    emit(start, n);
    return sentences;
}

}  // namespace verity
