#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "verity/unicode.hpp"

namespace verity {

struct PromptExample {
    std::string input;   // the statement, without the surrounding quotes
    std::string output;  // the expected verdict line

    bool operator==(const PromptExample&) const = default;
};

/// The four-part judgment prompt: role set, instruction, worked examples,
/// question. Rendering order is fixed.
struct PromptBundle {
    std::string role_set;
    std::string instruction;
    std::vector<PromptExample> examples;
    std::string question;

    bool operator==(const PromptBundle&) const = default;
};

/// The default bundle shipped with the artifact. Wording is kept verbatim,
/// quirks included, because parsers and fixtures are calibrated against it.
inline const PromptBundle& default_bundle() {
    static const PromptBundle kBundle = {
        "You are a knowledgeable and wise professor and you have the capability to distinguish "
        "between true and false and tell the false part of a statement, which is incorrect or "
        "ambiguous.",

        "You are asked to give comments on some statements, the comment includes the veracity "
        "score you think the saying is, point out the false part of the statement (the false "
        "part should be a word or a phrase inside the original statement), and give your one or "
        "two sentence reason.\n"
        "If the statement is determine is not objective or verifiable, output null. If you "
        "cannot tell its authenticity level, your output should be: Unable to judge. But please "
        "to note, try not to give an output that you are unable to judge.\n"
        "Following are 5 examples.",

        {
            {"Alan Grayson is the only member of the House of Representatives who raised most "
             "of his campaign funds in the last election from small contributions of less than "
             "$200.",
             "Veracity score: 100% (True), False Part: /"},
            {"Clint Eastwood said Hollywood is \"the place of traitors and pedophiles\" and he "
             "decided to \"leave\" it to \"fight against traitors with real American patriots "
             "with president Trump.",
             "Veracity score: 0% (False), False Part: Clint Eastwood said"},
            {"As Governor, Romney did not keep public safety funding in line with inflation.",
             "Veracity score: 30% (Mostly False), False Part: did not keep"},
            {"In California, \"they're rioting now\" over sanctuary cities in 2018.",
             "Veracity score: 0%(False), False Part: rioting now over sanctuary cities"},
            {"U.S. teenagers have now fallen behind their counterparts in Ireland, Poland and "
             "even Vietnam in math and science.",
             "Veracity score: 80% (Mostly True), False Part: fallen behind"},
        },

        "The Wisconsin Retirement System for public employees is \"a self-funded pension plan\" "
        "and \"it the money of the workers that funds it.",
    };
    return kBundle;
}

inline std::string render_prompt(const PromptBundle& bundle) {
    std::string out;
    out += "Role set:\n";
    out += bundle.role_set;
    out += "\n\nInstruction:\n";
    out += bundle.instruction;
    out += "\n\nExamples:\n";
    for (const PromptExample& ex : bundle.examples) {
        out += "input: \"" + ex.input + "\"\n";
        out += "output: " + ex.output + "\n";
    }
    out += "\nQuestion:\n";
    out += "input: \"" + bundle.question + "\"\n";
    out += "output:\n";
    return out;
}

/// Renders the few-shot prompt with the statement substituted into the final
/// input line.
inline std::string build_fewshot_prompt(std::string_view statement, const PromptBundle& bundle = default_bundle()) {
    if (trim_view(statement).empty()) throw std::domain_error("statement must be non-empty");
    PromptBundle b = bundle;
    b.question = std::string(statement);
    return render_prompt(b);
}

inline constexpr std::string_view kPlanPromptHeader =
    "Break the claim below into smaller verification steps.";

/// Decomposition prompt for the agent strategy: asks for a numbered list of
/// sub-questions, each answerable with one web search.
inline std::string build_agent_plan_prompt(std::string_view claim, int max_steps = 5) {
    if (trim_view(claim).empty()) throw std::domain_error("claim must be non-empty");
    if (max_steps < 1) throw std::domain_error("max_steps must be >= 1");
    std::string out;
    out += kPlanPromptHeader;
    out += "\nWrite at most ";
    out += std::to_string(max_steps);
    out += " sub-questions, each answerable with one web search, as a numbered list "
           "(\"1.\", \"2.\", ...), one per line, and nothing else.\n\n";
    out += "Claim: \"";
    out += claim;
    out += "\"\n";
    return out;
}

/// One search step's worth of evidence, pre-rendered as display lines.
struct EvidenceBlock {
    std::string query;
    std::vector<std::string> snippets;
};

inline constexpr std::string_view kNoEvidenceMarker = "No evidence retrieved.";

/// Synthesis prompt: the few-shot prompt with a bounded evidence section
/// inserted before the question, so the final answer parses with the same
/// grammar. Truncation happens at snippet granularity, earliest first.
inline std::string build_agent_synthesis_prompt(std::string_view claim,
                                                const std::vector<EvidenceBlock>& evidence,
                                                const PromptBundle& bundle = default_bundle(),
                                                std::size_t evidence_budget = 4000) {
    if (trim_view(claim).empty()) throw std::domain_error("claim must be non-empty");
    std::string block;
    std::size_t used = 0;
    bool exhausted = false;
    for (const EvidenceBlock& step : evidence) {
        if (exhausted) break;
        const std::string header = "search: " + step.query + "\n";
        if (used + header.size() > evidence_budget) break;
        std::string lines;
        for (const std::string& snippet : step.snippets) {
            const std::string line = "- " + snippet + "\n";
            if (used + header.size() + lines.size() + line.size() > evidence_budget) {
                exhausted = true;
                break;
            }
            lines += line;
        }
        block += header + lines;
        used += header.size() + lines.size();
    }
    if (block.empty()) block = std::string(kNoEvidenceMarker) + "\n";

    PromptBundle b = bundle;
    b.question = std::string(claim);
    std::string out;
    out += "Role set:\n";
    out += b.role_set;
    out += "\n\nInstruction:\n";
    out += b.instruction;
    out += "\n\nExamples:\n";
    for (const PromptExample& ex : b.examples) {
        out += "input: \"" + ex.input + "\"\n";
        out += "output: " + ex.output + "\n";
    }
    out += "\nEvidence:\n";
    out += block;
    out += "\nQuestion:\n";
    out += "input: \"" + b.question + "\"\n";
    out += "output:\n";
    return out;
}

/// Recovers the (input, output) pairs from a rendered examples section.
inline std::vector<PromptExample> parse_examples_section(std::string_view section) {
    std::vector<PromptExample> out;
    std::optional<std::string> pending_input;
    std::size_t pos = 0;
    while (pos <= section.size()) {
        const std::size_t eol = std::min(section.find('\n', pos), section.size());
        std::string_view line = section.substr(pos, eol - pos);
        if (line.rfind("input:", 0) == 0) {
            std::string_view body = trim_view(line.substr(6));
            if (body.size() >= 2 && body.front() == '"' && body.back() == '"')
                body = body.substr(1, body.size() - 2);
            pending_input = std::string(body);
        } else if (line.rfind("output:", 0) == 0 && pending_input) {
            out.push_back({std::move(*pending_input), std::string(trim_view(line.substr(7)))});
            pending_input.reset();
        }
        if (eol >= section.size()) break;
        pos = eol + 1;
    }
    return out;
}

/// Template file format: named sections delimited by `--- name ---` lines.
/// The examples section holds alternating input:/output: lines; the question
/// section holds the bare statement.
inline PromptBundle parse_bundle(std::string_view text) {
    PromptBundle bundle;
    std::string current_name;
    std::string current_body;
    const auto close_section = [&]() {
        if (current_name.empty()) return;
        // Section bodies keep interior newlines; outer blank lines are trimmed.
        std::string body = trim_copy(current_body);
        if (current_name == "role_set") bundle.role_set = body;
        else if (current_name == "instruction") bundle.instruction = body;
        else if (current_name == "examples") bundle.examples = parse_examples_section(body);
        else if (current_name == "question") bundle.question = body;
        else throw std::runtime_error("unknown template section: " + current_name);
    };
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, eol - pos);
        const std::string_view stripped = trim_view(line);
        if (stripped.size() > 8 && stripped.rfind("--- ", 0) == 0 &&
            stripped.compare(stripped.size() - 4, 4, " ---") == 0) {
            close_section();
            current_name = std::string(trim_view(stripped.substr(4, stripped.size() - 8)));
            current_body.clear();
        } else if (!current_name.empty()) {
            current_body += std::string(line);
            current_body += '\n';
        }
        if (eol >= text.size()) break;
        pos = eol + 1;
    }
    close_section();
    if (bundle.role_set.empty() && bundle.instruction.empty() && bundle.examples.empty())
        throw std::runtime_error("template file has no recognizable sections");
    return bundle;
}

inline PromptBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open prompt template: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_bundle(buf.str());
}

/// Pulls the question statement back out of a rendered prompt (the text in
/// the last `input: "..."` line). Used to key fixture backends.
inline std::optional<std::string> question_of_prompt(std::string_view prompt) {
    const std::size_t last = prompt.rfind("input: \"");
    if (last == std::string_view::npos) return std::nullopt;
    const std::size_t start = last + 8;
    const std::size_t eol = prompt.find('\n', start);
    std::string_view line = prompt.substr(start, eol == std::string_view::npos ? prompt.size() - start
                                                                               : eol - start);
    if (!line.empty() && line.back() == '"') line.remove_suffix(1);
    return std::string(line);
}

/// Pulls the claim out of a rendered plan prompt, or nullopt for other prompts.
inline std::optional<std::string> plan_claim_of_prompt(std::string_view prompt) {
    if (prompt.rfind(kPlanPromptHeader, 0) != 0) return std::nullopt;
    const std::size_t mark = prompt.find("Claim: \"");
    if (mark == std::string_view::npos) return std::nullopt;
    const std::size_t start = mark + 8;
    const std::size_t eol = prompt.find('\n', start);
    std::string_view line = prompt.substr(start, eol == std::string_view::npos ? prompt.size() - start
                                                                               : eol - start);
    if (!line.empty() && line.back() == '"') line.remove_suffix(1);
    return std::string(line);
}

inline bool is_synthesis_prompt(std::string_view prompt) {
    return prompt.find("\nEvidence:\n") != std::string_view::npos;
}

}  // namespace verity
