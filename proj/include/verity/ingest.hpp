#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "verity/unicode.hpp"

namespace verity {

enum class DocKind { Plaintext, Html, Srt, Vtt };

inline std::string_view dockind_slug(DocKind k) {
    switch (k) {
        case DocKind::Plaintext: return "plaintext";
        case DocKind::Html: return "html";
        case DocKind::Srt: return "srt";
        case DocKind::Vtt: return "vtt";
    }
    return "plaintext";
}

inline std::optional<DocKind> dockind_from_slug(std::string_view s) {
    if (s == "plaintext" || s == "text" || s == "txt") return DocKind::Plaintext;
    if (s == "html" || s == "htm") return DocKind::Html;
    if (s == "srt") return DocKind::Srt;
    if (s == "vtt") return DocKind::Vtt;
    return std::nullopt;
}

/// Subtitle cue: time range in milliseconds plus the scalar-value range of
/// this cue's line within SourceDocument::text.
struct Cue {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    CharRange range;

    bool operator==(const Cue&) const = default;
};

struct SourceDocument {
    std::string origin;
    DocKind kind = DocKind::Plaintext;
    std::string text;             // UTF-8, LF line endings
    std::vector<Cue> cues;        // subtitle kinds only
    std::vector<std::string> warnings;

    bool operator==(const SourceDocument&) const = default;
};

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Lossy UTF-8 decode plus CRLF/CR -> LF normalization, one warning per
/// replaced sequence.
inline std::u32string decode_normalized(std::string_view raw, std::vector<std::string>& warnings) {
    utf8::Decoded d = utf8::decode(raw);
    for (std::size_t i = 0; i < d.replacements; ++i)
        warnings.push_back("invalid byte sequence replaced with U+FFFD");
    std::u32string out;
    out.reserve(d.codepoints.size());
    for (std::size_t i = 0; i < d.codepoints.size(); ++i) {
        char32_t cp = d.codepoints[i];
        if (cp == U'\r') {
            if (i + 1 < d.codepoints.size() && d.codepoints[i + 1] == U'\n') continue;
            cp = U'\n';
        }
        out.push_back(cp);
    }
    return out;
}

inline bool is_line_space(char32_t cp) { return is_space_cp(cp) && cp != U'\n'; }

}  // namespace detail

/// Plaintext: decode, normalize newlines, trim each line's edges.
inline SourceDocument extract_plaintext(std::string_view raw, std::string origin = {}) {
    SourceDocument doc;
    doc.origin = std::move(origin);
    doc.kind = DocKind::Plaintext;
    const std::u32string cps = detail::decode_normalized(raw, doc.warnings);

    std::u32string out;
    out.reserve(cps.size());
    std::size_t line_start = 0;
    const auto flush_line = [&](std::size_t end) {
        std::size_t b = line_start, e = end;
        while (b < e && detail::is_line_space(cps[b])) ++b;
        while (e > b && detail::is_line_space(cps[e - 1])) --e;
        out.append(cps, b, e - b);
    };
    for (std::size_t i = 0; i <= cps.size(); ++i) {
        if (i == cps.size() || cps[i] == U'\n') {
            flush_line(i);
            if (i < cps.size()) out.push_back(U'\n');
            line_start = i + 1;
        }
    }
    doc.text = utf8::encode(out);
    return doc;
}

// ---------------------------------------------------------------------------
// HTML extraction
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<char32_t> named_entity(std::string_view name) {
    struct Entry { std::string_view name; char32_t cp; };
    static constexpr Entry kTable[] = {
        {"amp", U'&'},    {"lt", U'<'},      {"gt", U'>'},      {"quot", U'"'},
        {"apos", U'\''},  {"nbsp", U' '},    {"ndash", U'–'}, {"mdash", U'—'},
        {"hellip", U'…'}, {"lsquo", U'‘'}, {"rsquo", U'’'},
        {"ldquo", U'“'}, {"rdquo", U'”'}, {"laquo", U'«'},
        {"raquo", U'»'}, {"copy", U'©'},  {"reg", U'®'},
        {"trade", U'™'}, {"deg", U'°'},   {"middot", U'·'},
        {"bull", U'•'},  {"times", U'×'}, {"divide", U'÷'},
        {"eacute", U'é'}, {"egrave", U'è'}, {"agrave", U'à'},
        {"uuml", U'ü'},  {"ouml", U'ö'},  {"auml", U'ä'},
        {"szlig", U'ß'}, {"ccedil", U'ç'}, {"sect", U'§'},
        {"para", U'¶'},  {"plusmn", U'±'}, {"frac12", U'½'},
        {"euro", U'€'},  {"pound", U'£'},  {"yen", U'¥'},
        {"cent", U'¢'},
    };
    for (const Entry& e : kTable)
        if (e.name == name) return e.cp;
    return std::nullopt;
}

/// Decodes the entity starting at s[i] (s[i] == '&'); on success advances i
/// past it and returns the codepoint. Unknown entities are left literal.
inline std::optional<char32_t> decode_entity(std::string_view s, std::size_t& i) {
    const std::size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 32) return std::nullopt;
    std::string_view body = s.substr(i + 1, semi - i - 1);
    if (body.empty()) return std::nullopt;
    char32_t cp = 0;
    if (body[0] == '#') {
        std::size_t k = 1;
        int base = 10;
        if (k < body.size() && (body[k] == 'x' || body[k] == 'X')) { base = 16; ++k; }
        if (k >= body.size()) return std::nullopt;
        for (; k < body.size(); ++k) {
            const char c = ascii_lower(body[k]);
            int digit;
            if (c >= '0' && c <= '9') digit = c - '0';
            else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
            else return std::nullopt;
            cp = cp * base + static_cast<char32_t>(digit);
            if (cp > 0x10FFFF) return std::nullopt;
        }
        if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = utf8::kReplacement;
    } else {
        const auto named = named_entity(body);
        if (!named) return std::nullopt;
        cp = *named;
    }
    i = semi + 1;
    return cp;
}

inline bool tag_name_equals(std::string_view tag, std::string_view name) {
    if (tag.size() != name.size()) return false;
    for (std::size_t i = 0; i < tag.size(); ++i)
        if (ascii_lower(tag[i]) != name[i]) return false;
    return true;
}

enum class BreakKind { None, Space, Line, Paragraph };

/// Paragraph-level blocks get a blank line; row-level ones a single newline.
inline BreakKind block_break(std::string_view tag) {
    static constexpr std::string_view kParagraph[] = {"p", "div", "h1", "h2", "h3",
                                                      "h4", "h5", "h6"};
    static constexpr std::string_view kLine[] = {"li", "tr", "br"};
    for (auto t : kParagraph)
        if (tag_name_equals(tag, t)) return BreakKind::Paragraph;
    for (auto t : kLine)
        if (tag_name_equals(tag, t)) return BreakKind::Line;
    return BreakKind::None;
}

inline bool is_ascii_letter(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

struct TextBuilder {
    std::string out;
    BreakKind pending = BreakKind::None;
    bool started = false;

    void request(BreakKind k) {
        if (static_cast<int>(k) > static_cast<int>(pending)) pending = k;
    }
    void put(char32_t cp) {
        if (is_space_cp(cp)) {
            request(BreakKind::Space);
            return;
        }
        if (started) {
            if (pending == BreakKind::Paragraph) out += "\n\n";
            else if (pending == BreakKind::Line) out += "\n";
            else if (pending == BreakKind::Space) out += " ";
        }
        pending = BreakKind::None;
        started = true;
        utf8::append(out, cp);
    }
};

}  // namespace detail

/// Error-tolerant HTML text extraction: drops script/style/noscript/head,
/// turns block boundaries into line breaks, decodes entities, collapses
/// whitespace runs.
inline SourceDocument extract_html(std::string_view raw, std::string origin = {}) {
    SourceDocument doc;
    doc.origin = std::move(origin);
    doc.kind = DocKind::Html;
    std::vector<std::string> warnings;
    const std::string html = utf8::encode(detail::decode_normalized(raw, warnings));
    doc.warnings = std::move(warnings);

    detail::TextBuilder builder;
    int head_depth = 0;
    int noscript_depth = 0;
    std::size_t i = 0;
    const std::size_t n = html.size();
    const std::string lowered = ascii_lower_copy(html);

    while (i < n) {
        const char c = html[i];
        if (c == '<') {
            if (i + 3 < n && html.compare(i, 4, "<!--") == 0) {
                const std::size_t end = html.find("-->", i + 4);
                i = (end == std::string::npos) ? n : end + 3;
                continue;
            }
            if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
                const std::size_t end = html.find('>', i + 1);
                i = (end == std::string::npos) ? n : end + 1;
                continue;
            }
            if (i + 1 < n && (detail::is_ascii_letter(html[i + 1]) || html[i + 1] == '/')) {
                const bool closing = html[i + 1] == '/';
                std::size_t j = i + 1 + (closing ? 1 : 0);
                const std::size_t name_start = j;
                while (j < n && (detail::is_ascii_letter(html[j]) || (html[j] >= '0' && html[j] <= '9'))) ++j;
                const std::string_view tag = std::string_view(html).substr(name_start, j - name_start);
                // Scan to '>' skipping quoted attribute values.
                while (j < n && html[j] != '>') {
                    if (html[j] == '"' || html[j] == '\'') {
                        const char q = html[j];
                        ++j;
                        while (j < n && html[j] != q) ++j;
                    }
                    if (j < n) ++j;
                }
                i = (j == n) ? n : j + 1;

                if (!closing && (detail::tag_name_equals(tag, "script") || detail::tag_name_equals(tag, "style"))) {
                    // Raw text elements: skip straight to the matching close tag.
                    const std::string close = "</" + ascii_lower_copy(tag);
                    const std::size_t end = lowered.find(close, i);
                    if (end == std::string::npos) { i = n; continue; }
                    const std::size_t gt = html.find('>', end);
                    i = (gt == std::string::npos) ? n : gt + 1;
                    continue;
                }
                if (detail::tag_name_equals(tag, "head")) {
                    head_depth = std::max(0, head_depth + (closing ? -1 : 1));
                    continue;
                }
                if (detail::tag_name_equals(tag, "noscript")) {
                    noscript_depth = std::max(0, noscript_depth + (closing ? -1 : 1));
                    continue;
                }
                const detail::BreakKind br = detail::block_break(tag);
                if (br != detail::BreakKind::None) builder.request(br);
                continue;
            }
            // Bare '<' not starting a tag: literal.
            builder.put(U'<');
            ++i;
            continue;
        }
        if (head_depth > 0 || noscript_depth > 0) { ++i; continue; }
        if (c == '&') {
            std::size_t k = i;
            if (const auto cp = detail::decode_entity(html, k)) {
                builder.put(*cp);
                i = k;
                continue;
            }
            builder.put(U'&');
            ++i;
            continue;
        }
        // Decode one UTF-8 codepoint (input is already valid after decode pass).
        const unsigned char b0 = static_cast<unsigned char>(c);
        std::size_t len = 1;
        if (b0 >= 0xF0) len = 4;
        else if (b0 >= 0xE0) len = 3;
        else if (b0 >= 0xC0) len = 2;
        len = std::min(len, n - i);
        const utf8::Decoded d = utf8::decode(std::string_view(html).substr(i, len));
        if (!d.codepoints.empty()) builder.put(d.codepoints[0]);
        i += len;
    }
    doc.text = std::move(builder.out);
    // A literal '<' that ends up glued to a letter would read as a residual
    // tag; pad it. Keeps the no-tags guarantee absolute.
    for (std::size_t k = 0; k + 1 < doc.text.size(); ++k) {
        if (doc.text[k] == '<' && detail::is_ascii_letter(doc.text[k + 1]))
            doc.text.insert(k + 1, 1, ' ');
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Subtitles (SRT / WebVTT)
// ---------------------------------------------------------------------------

namespace detail {

/// "HH:MM:SS,mmm" or "MM:SS.mmm"; comma and dot separators both accepted.
inline std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    s = trim_view(s);
    std::vector<std::int64_t> parts;
    std::int64_t cur = 0;
    int digits = 0;
    std::int64_t millis = -1;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ':') {
            if (digits == 0) return std::nullopt;
            parts.push_back(cur);
            cur = 0;
            digits = 0;
            continue;
        }
        const char c = s[i];
        if (c == ',' || c == '.') {
            if (millis >= 0) return std::nullopt;
            // The rest is the millisecond field.
            std::int64_t ms = 0;
            int md = 0;
            for (std::size_t k = i + 1; k < s.size(); ++k) {
                if (s[k] < '0' || s[k] > '9') return std::nullopt;
                if (md < 3) { ms = ms * 10 + (s[k] - '0'); ++md; }
            }
            if (md == 0) return std::nullopt;
            while (md < 3) { ms *= 10; ++md; }
            millis = ms;
            if (digits == 0) return std::nullopt;
            parts.push_back(cur);
            cur = 0;
            digits = 0;
            break;
        }
        if (c < '0' || c > '9') return std::nullopt;
        cur = cur * 10 + (c - '0');
        ++digits;
    }
    if (millis < 0) return std::nullopt;
    std::int64_t h = 0, m = 0, sec = 0;
    if (parts.size() == 3) { h = parts[0]; m = parts[1]; sec = parts[2]; }
    else if (parts.size() == 2) { m = parts[0]; sec = parts[1]; }
    else return std::nullopt;
    return ((h * 60 + m) * 60 + sec) * 1000 + millis;
}

/// Strips <i>, <b>, <c.classname>, etc., then collapses whitespace.
inline std::string strip_cue_styling(std::string_view s) {
    std::string flat;
    flat.reserve(s.size());
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') { in_tag = true; continue; }
        if (c == '>') { in_tag = false; continue; }
        if (!in_tag) flat.push_back(c);
    }
    std::string out;
    out.reserve(flat.size());
    bool pending_space = false;
    for (char c : flat) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

struct RawCue {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::string text;
};

}  // namespace detail

/// SRT and WebVTT share a block structure: blocks separated by blank lines,
/// each holding one "start --> end" line followed by cue text. Malformed
/// blocks are skipped with a warning; zero parseable cues is an error.
inline SourceDocument extract_subtitles(std::string_view raw, DocKind format, std::string origin = {}) {
    if (format != DocKind::Srt && format != DocKind::Vtt)
        throw IngestError("extract_subtitles requires an Srt or Vtt kind");
    SourceDocument doc;
    doc.origin = std::move(origin);
    doc.kind = format;
    const std::string text = utf8::encode(detail::decode_normalized(raw, doc.warnings));

    std::vector<std::vector<std::string>> blocks;
    std::vector<std::string> current;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string line = text.substr(pos, eol - pos);
        if (trim_view(line).empty()) {
            if (!current.empty()) blocks.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(std::move(line));
        }
        if (eol >= text.size()) break;
        pos = eol + 1;
    }
    if (!current.empty()) blocks.push_back(std::move(current));

    std::vector<detail::RawCue> cues;
    for (const auto& block : blocks) {
        const std::string first = trim_copy(block.front());
        if (first.rfind("WEBVTT", 0) == 0 || first.rfind("NOTE", 0) == 0 ||
            first.rfind("STYLE", 0) == 0 || first.rfind("REGION", 0) == 0) {
            continue;
        }
        std::size_t arrow_line = block.size();
        for (std::size_t k = 0; k < block.size(); ++k) {
            if (block[k].find("-->") != std::string::npos) { arrow_line = k; break; }
        }
        if (arrow_line >= block.size()) {
            doc.warnings.push_back("subtitle block without a timestamp line skipped");
            continue;
        }
        const std::string& ts = block[arrow_line];
        const std::size_t arrow = ts.find("-->");
        const auto start = detail::parse_timestamp(std::string_view(ts).substr(0, arrow));
        std::string_view rest = std::string_view(ts).substr(arrow + 3);
        // Drop cue settings after the end timestamp ("align:start ...").
        std::string_view end_field = trim_view(rest);
        if (const std::size_t sp = end_field.find(' '); sp != std::string_view::npos)
            end_field = end_field.substr(0, sp);
        const auto end = detail::parse_timestamp(end_field);
        if (!start || !end || *end < *start) {
            doc.warnings.push_back("subtitle block with malformed timestamps skipped");
            continue;
        }
        std::string body;
        for (std::size_t k = arrow_line + 1; k < block.size(); ++k) {
            if (!body.empty()) body.push_back(' ');
            body += trim_copy(block[k]);
        }
        const std::string cleaned = detail::strip_cue_styling(body);
        if (cleaned.empty()) continue;
        cues.push_back({*start, *end, cleaned});
    }
    if (cues.empty()) throw IngestError("no parseable subtitle cues in input");

    std::stable_sort(cues.begin(), cues.end(),
                     [](const detail::RawCue& a, const detail::RawCue& b) { return a.start_ms < b.start_ms; });

    std::size_t cp_pos = 0;
    for (std::size_t k = 0; k < cues.size(); ++k) {
        if (k > 0) {
            doc.text.push_back('\n');
            ++cp_pos;
        }
        const std::size_t len = utf8::length(cues[k].text);
        doc.cues.push_back({cues[k].start_ms, cues[k].end_ms, {cp_pos, cp_pos + len}});
        doc.text += cues[k].text;
        cp_pos += len;
    }
    return doc;
}

inline SourceDocument extract(std::string_view raw, DocKind kind, std::string origin = {}) {
    switch (kind) {
        case DocKind::Plaintext: return extract_plaintext(raw, std::move(origin));
        case DocKind::Html: return extract_html(raw, std::move(origin));
        case DocKind::Srt:
        case DocKind::Vtt: return extract_subtitles(raw, kind, std::move(origin));
    }
    throw IngestError("unknown document kind");
}

/// Best-effort kind inference from a path/URL extension plus content sniffing.
inline DocKind infer_kind(std::string_view path_or_url, std::string_view content) {
    std::string lowered = ascii_lower_copy(path_or_url);
    if (const std::size_t q = lowered.find_first_of("?#"); q != std::string::npos) lowered.resize(q);
    const auto ends_with = [&](std::string_view suffix) {
        return lowered.size() >= suffix.size() &&
               lowered.compare(lowered.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".srt")) return DocKind::Srt;
    if (ends_with(".vtt")) return DocKind::Vtt;
    if (ends_with(".html") || ends_with(".htm")) return DocKind::Html;
    if (ends_with(".txt") || ends_with(".md")) return DocKind::Plaintext;
    const std::string head = ascii_lower_copy(content.substr(0, 512));
    if (head.rfind("webvtt", 0) == 0) return DocKind::Vtt;
    if (head.find("<!doctype html") != std::string::npos || head.find("<html") != std::string::npos ||
        head.find("<body") != std::string::npos || head.find("<p>") != std::string::npos)
        return DocKind::Html;
    return DocKind::Plaintext;
}

}  // namespace verity
