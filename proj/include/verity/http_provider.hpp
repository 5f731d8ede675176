#pragma once

#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "verity/provider.hpp"

namespace verity {

namespace detail {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /... (never empty)
};

inline SplitUrl split_url(const std::string& url) {
    const std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) return {url, "/"};
    const std::size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, "/"};
    return {url.substr(0, path), url.substr(path)};
}

inline bool transient_status(int status) {
    return status == 429 || (status >= 500 && status <= 599);
}

inline std::chrono::milliseconds backoff_delay(const RetryPolicy& retry, int attempt) {
    auto delay = retry.base_backoff * (1LL << std::min(attempt, 16));
    return std::min<std::chrono::milliseconds>(
        std::chrono::duration_cast<std::chrono::milliseconds>(delay), std::chrono::seconds(30));
}

}  // namespace detail

/// Shared retry/auth/rate-limit discipline for one HTTP endpoint: 429 and
/// 5xx (and transport failures) are retried with exponential backoff up to
/// max_attempts; 401/403 raise AuthError with no retry.
class HttpJsonEndpoint {
  public:
    explicit HttpJsonEndpoint(const ProviderConfig& config)
        : config_(config),
          url_(detail::split_url(config.endpoint)),
          limiter_(config.rate_limit_per_minute),
          in_flight_(std::max(1, config.max_in_flight)) {}

    const ProviderConfig& config() const { return config_; }

    /// Secret is read from the configured env var at call time, never stored.
    std::string auth_token() const {
        if (config_.auth_env_var.empty()) return {};
        const char* value = std::getenv(config_.auth_env_var.c_str());
        return value ? value : std::string();
    }

    nlohmann::json post_json(const nlohmann::json& body, bool require_auth) {
        const std::string token = auth_token();
        if (require_auth && token.empty())
            throw AuthError("environment variable " + config_.auth_env_var + " is not set");

        std::string last_error;
        for (int attempt = 0; attempt < config_.retry.max_attempts; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(detail::backoff_delay(config_.retry, attempt - 1));
            in_flight_.acquire();
            limiter_.acquire();
            httplib::Result res = [&] {
                httplib::Client client(url_.base);
                client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
                client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
                httplib::Headers headers;
                if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
                return client.Post(url_.path, headers, body.dump(), "application/json");
            }();
            in_flight_.release();

            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403)
                throw AuthError("authentication rejected (HTTP " + std::to_string(res->status) + ")");
            if (detail::transient_status(res->status)) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw MalformedResponse("unexpected HTTP status " + std::to_string(res->status));
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw MalformedResponse(std::string("response body is not JSON: ") + e.what());
            }
        }
        throw TransientExhausted("retries exhausted after " + std::to_string(config_.retry.max_attempts) +
                                 " attempts; last error: " + last_error);
    }

  private:
    ProviderConfig config_;
    detail::SplitUrl url_;
    RateLimiter limiter_;
    std::counting_semaphore<256> in_flight_;
};

/// Chat-completion JSON over HTTP: messages array in, choices/message/content
/// out. Endpoint-configurable so any compatible hosted or local model serves.
class HttpChatBackend : public ModelBackend {
  public:
    explicit HttpChatBackend(const ProviderConfig& config) : endpoint_(config) {}

    std::string complete(const ModelRequest& request) override {
        if (request.messages.empty()) throw std::domain_error("request must carry at least one message");
        if (request.temperature < 0) throw std::domain_error("temperature must be >= 0");
        nlohmann::json body;
        body["model"] = request.model_id.empty() ? endpoint_.config().model_id : request.model_id;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;
        nlohmann::json messages = nlohmann::json::array();
        for (const ChatMessage& m : request.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        body["messages"] = std::move(messages);

        const nlohmann::json res = endpoint_.post_json(body, /*require_auth=*/true);
        try {
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw MalformedResponse("payload lacks choices[0].message.content");
        }
    }

  private:
    HttpJsonEndpoint endpoint_;
};

/// Minimal search wire protocol: POST {"query","k"} in, {"results":[{title,
/// url,snippet}]} out. Real deployments sit a thin proxy in front of whatever
/// search API they use; tests use a local stub.
class HttpSearchBackend : public SearchBackend {
  public:
    explicit HttpSearchBackend(const ProviderConfig& config, bool require_auth = false)
        : endpoint_(config), require_auth_(require_auth) {}

    std::vector<SearchResult> search(const std::string& query, int k = 5) override {
        if (trim_view(query).empty()) throw std::domain_error("search query must be non-empty");
        nlohmann::json body;
        body["query"] = query;
        body["k"] = k;
        const nlohmann::json res = endpoint_.post_json(body, require_auth_);
        if (!res.contains("results") || !res["results"].is_array())
            throw MalformedResponse("payload lacks a results array");
        std::vector<SearchResult> out;
        for (const auto& r : res["results"]) {
            SearchResult sr{r.value("title", ""), r.value("url", ""), r.value("snippet", "")};
            if (sr.url.empty()) continue;
            out.push_back(std::move(sr));
            if (k >= 0 && out.size() == static_cast<std::size_t>(k)) break;
        }
        return out;
    }

  private:
    HttpJsonEndpoint endpoint_;
    bool require_auth_;
};

}  // namespace verity
