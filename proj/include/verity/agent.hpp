#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "verity/prompting.hpp"
#include "verity/provider.hpp"
#include "verity/verdict.hpp"
#include "verity/verdict_parse.hpp"

namespace verity {

struct AgentStep {
    std::string sub_question;
    std::string query;
    std::vector<SearchResult> results;

    bool operator==(const AgentStep&) const = default;
};

/// Full audit trail of one agent run: the decomposition, every search, and
/// the raw synthesis answer.
struct AgentTrace {
    std::string claim;
    std::vector<std::string> plan;
    std::vector<AgentStep> steps;
    std::string final_raw;
    std::size_t step_count = 0;

    bool operator==(const AgentTrace&) const = default;
};

/// Provider/search/parse failures propagate with whatever trace exists so far.
struct AgentError : std::runtime_error {
    AgentTrace trace;

    AgentError(const std::string& what, AgentTrace partial)
        : std::runtime_error(what), trace(std::move(partial)) {}
};

struct AgentOptions {
    int max_steps = 5;
    std::string model_id = "gpt-4";
    double temperature = 0.0;
    std::size_t evidence_budget = 4000;
    const PromptBundle* bundle = nullptr;  // null = default bundle
};

/// Accepts "1.", "1)" and "-" list markers, one item per line.
inline std::vector<std::string> parse_plan(std::string_view text, int max_steps) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= text.size() && items.size() < static_cast<std::size_t>(max_steps)) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        std::string_view line = trim_view(text.substr(pos, eol - pos));
        pos = eol + 1;
        if (line.empty()) {
            if (eol >= text.size()) break;
            continue;
        }
        std::string_view body;
        if (line[0] == '-' || line[0] == '*') {
            body = line.substr(1);
        } else {
            std::size_t d = 0;
            while (d < line.size() && line[d] >= '0' && line[d] <= '9') ++d;
            if (d > 0 && d < line.size() && (line[d] == '.' || line[d] == ')')) body = line.substr(d + 1);
        }
        if (!body.empty()) {
            const std::string_view item = trim_view(body);
            if (!item.empty()) items.emplace_back(item);
        }
        if (eol >= text.size()) break;
    }
    return items;
}

/// Plan -> search per sub-question -> synthesize -> parse. Linear, one search
/// call per step; total backend calls per claim are bounded by 2 + max_steps.
inline std::pair<Verdict, AgentTrace> verify_with_agent(const std::string& claim, ModelBackend& model,
                                                        SearchBackend& search,
                                                        const AgentOptions& options = {},
                                                        std::vector<std::string>* warnings = nullptr) {
    if (trim_view(claim).empty()) throw std::domain_error("claim must be non-empty");
    if (options.max_steps < 1) throw std::domain_error("max_steps must be >= 1");
    const PromptBundle& bundle = options.bundle ? *options.bundle : default_bundle();

    AgentTrace trace;
    trace.claim = claim;
    try {
        const std::string plan_raw = model.complete(ModelRequest::for_prompt(
            build_agent_plan_prompt(claim, options.max_steps), options.model_id, options.temperature));
        trace.plan = parse_plan(plan_raw, options.max_steps);
        if (trace.plan.empty()) trace.plan.push_back(claim);  // degenerate plan: search the claim itself

        for (const std::string& sub_question : trace.plan) {
            AgentStep step;
            step.sub_question = sub_question;
            step.query = sub_question;
            step.results = search.search(step.query);
            trace.steps.push_back(std::move(step));
            ++trace.step_count;
        }

        std::vector<EvidenceBlock> evidence;
        for (const AgentStep& step : trace.steps) {
            EvidenceBlock block;
            block.query = step.query;
            for (const SearchResult& r : step.results)
                block.snippets.push_back(r.title + " (" + r.url + "): " + r.snippet);
            evidence.push_back(std::move(block));
        }
        const std::string synthesis_prompt =
            build_agent_synthesis_prompt(claim, evidence, bundle, options.evidence_budget);
        trace.final_raw = model.complete(
            ModelRequest::for_prompt(synthesis_prompt, options.model_id, options.temperature));

        Verdict verdict = parse_verdict({trace.final_raw, Strategy::Agent}, warnings);
        return {std::move(verdict), std::move(trace)};
    } catch (const AgentError&) {
        throw;
    } catch (const ParseError& e) {
        throw AgentError(std::string("synthesis answer unparseable: ") + e.what(), std::move(trace));
    } catch (const ProviderError& e) {
        throw AgentError(std::string("backend failure: ") + e.what(), std::move(trace));
    } catch (const std::domain_error& e) {
        throw AgentError(std::string("backend rejected input: ") + e.what(), std::move(trace));
    }
}

}  // namespace verity
