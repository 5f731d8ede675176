#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "verity/bot.hpp"
#include "verity/provider.hpp"
#include "verity/verdict.hpp"

namespace verity {

inline ProviderConfig default_search_config() {
    ProviderConfig cfg;
    cfg.endpoint.clear();  // empty = no search endpoint configured
    cfg.auth_env_var = "VERITY_SEARCH_KEY";
    return cfg;
}

/// Application config: JSON file plus environment overrides. Secrets are
/// named by env var, never written into the file.
struct AppConfig {
    ProviderConfig provider;
    ProviderConfig search = default_search_config();
    Strategy default_strategy = Strategy::FewShot;
    BotOptions bot;
    std::string out_dir = ".";
    std::string template_path;       // optional prompt bundle override
    std::string abbreviations_path;  // optional extra abbreviation list
};

inline AppConfig parse_app_config(const nlohmann::json& j) {
    AppConfig cfg;
    if (j.contains("provider")) {
        const auto& p = j["provider"];
        cfg.provider.endpoint = p.value("endpoint", cfg.provider.endpoint);
        cfg.provider.auth_env_var = p.value("auth_env_var", cfg.provider.auth_env_var);
        cfg.provider.model_id = p.value("model_id", cfg.provider.model_id);
        cfg.provider.timeout = std::chrono::milliseconds(p.value("timeout_ms", 30000));
        if (p.contains("retry")) {
            cfg.provider.retry.max_attempts = p["retry"].value("max_attempts", 3);
            cfg.provider.retry.base_backoff =
                std::chrono::milliseconds(p["retry"].value("base_backoff_ms", 200));
        }
        cfg.provider.rate_limit_per_minute = p.value("rate_limit_per_minute", 60);
        cfg.provider.max_in_flight = p.value("max_in_flight", 4);
    }
    if (j.contains("search")) {
        const auto& s = j["search"];
        cfg.search = cfg.provider;
        cfg.search.endpoint = s.value("endpoint", "");
        cfg.search.auth_env_var = s.value("auth_env_var", "VERITY_SEARCH_KEY");
    }
    if (j.contains("strategy")) {
        const auto strategy = strategy_from_slug(j["strategy"].get<std::string>());
        if (!strategy) throw std::runtime_error("config: strategy must be \"fewshot\" or \"agent\"");
        cfg.default_strategy = *strategy;
    }
    if (j.contains("bot")) {
        const auto& b = j["bot"];
        cfg.bot.api_base = b.value("api_base", cfg.bot.api_base);
        cfg.bot.token_env = b.value("token_env", cfg.bot.token_env);
        cfg.bot.poll_timeout_s = b.value("poll_timeout_s", cfg.bot.poll_timeout_s);
        cfg.bot.poll_interval = std::chrono::milliseconds(b.value("poll_interval_ms", 0));
    }
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.template_path = j.value("template", "");
    cfg.abbreviations_path = j.value("abbreviations", "");
    return cfg;
}

inline void apply_env_overrides(AppConfig& cfg) {
    if (const char* endpoint = std::getenv("VERITY_MODEL_ENDPOINT"); endpoint && *endpoint)
        cfg.provider.endpoint = endpoint;
}

inline void validate_config(const AppConfig& cfg) {
    if (cfg.provider.endpoint.empty()) throw std::runtime_error("config: provider endpoint is empty");
    if (cfg.provider.retry.max_attempts < 1)
        throw std::runtime_error("config: retry.max_attempts must be >= 1");
    if (cfg.provider.max_in_flight < 1)
        throw std::runtime_error("config: max_in_flight must be >= 1");
    if (cfg.bot.poll_timeout_s < 0)
        throw std::runtime_error("config: poll_timeout_s must be >= 0");
}

inline AppConfig load_app_config(const std::string& path = {}) {
    AppConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        cfg = parse_app_config(nlohmann::json::parse(buf.str()));
    }
    apply_env_overrides(cfg);
    validate_config(cfg);
    return cfg;
}

}  // namespace verity
