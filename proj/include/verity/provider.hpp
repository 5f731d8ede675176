#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "verity/prompting.hpp"
#include "verity/unicode.hpp"

namespace verity {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct ModelRequest {
    std::string model_id = "gpt-4";
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;

    static ModelRequest for_prompt(std::string prompt, std::string model_id = "gpt-4",
                                   double temperature = 0.0) {
        ModelRequest r;
        r.model_id = std::move(model_id);
        r.temperature = temperature;
        r.messages.push_back({"user", std::move(prompt)});
        return r;
    }
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_backoff{200};
};

/// Transport settings. Config files carry only the *name* of the environment
/// variable holding the secret, never the secret itself.
struct ProviderConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string auth_env_var = "VERITY_MODEL_KEY";
    std::string model_id = "gpt-4";
    std::chrono::milliseconds timeout{30000};
    RetryPolicy retry;
    int rate_limit_per_minute = 60;  // <= 0 disables the limiter
    int max_in_flight = 4;
};

struct SearchResult {
    std::string title;
    std::string url;
    std::string snippet;

    bool operator==(const SearchResult&) const = default;
};

struct ProviderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AuthError : ProviderError {
    using ProviderError::ProviderError;
};
struct TransientExhausted : ProviderError {
    using ProviderError::ProviderError;
};
struct MalformedResponse : ProviderError {
    using ProviderError::ProviderError;
};
struct ReplayMiss : ProviderError {
    using ProviderError::ProviderError;
};

class ModelBackend {
  public:
    virtual ~ModelBackend() = default;
    virtual std::string complete(const ModelRequest& request) = 0;
};

class SearchBackend {
  public:
    virtual ~SearchBackend() = default;
    /// At most k results; empty query is a domain error.
    virtual std::vector<SearchResult> search(const std::string& query, int k = 5) = 0;
};

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

/// Sliding-window limiter: at most `per_minute` grants in any 60s window.
/// The clock is injectable so the window can be driven in tests.
class RateLimiter {
  public:
    using Clock = std::chrono::steady_clock;
    using TimePoint = Clock::time_point;

    explicit RateLimiter(int per_minute, std::function<TimePoint()> now = [] { return Clock::now(); })
        : limit_(per_minute), now_(std::move(now)) {}

    bool try_acquire() {
        if (limit_ <= 0) return true;
        std::lock_guard lock(mu_);
        const TimePoint t = now_();
        purge(t);
        if (grants_.size() >= static_cast<std::size_t>(limit_)) return false;
        grants_.push_back(t);
        return true;
    }

    void acquire() {
        if (limit_ <= 0) return;
        while (true) {
            TimePoint wake;
            {
                std::lock_guard lock(mu_);
                const TimePoint t = now_();
                purge(t);
                if (grants_.size() < static_cast<std::size_t>(limit_)) {
                    grants_.push_back(t);
                    return;
                }
                wake = grants_.front() + std::chrono::seconds(60);
            }
            std::this_thread::sleep_until(std::min(wake, now_() + std::chrono::milliseconds(50)));
        }
    }

  private:
    void purge(TimePoint t) {
        while (!grants_.empty() && t - grants_.front() >= std::chrono::seconds(60)) grants_.pop_front();
    }

    int limit_;
    std::function<TimePoint()> now_;
    std::mutex mu_;
    std::deque<TimePoint> grants_;
};

// ---------------------------------------------------------------------------
// Fixture (mock) backends
// ---------------------------------------------------------------------------

/// Deterministic in-memory backend. Answers are keyed by the question
/// extracted from the rendered prompt; plan prompts consult a separate map.
/// Synthesis prompts prefer `agent_answers` so the two strategies can give
/// different verdicts for the same claim.
class MockModelBackend : public ModelBackend {
  public:
    std::map<std::string, std::string> answers;        // question -> raw answer
    std::map<std::string, std::string> agent_answers;  // question -> raw answer (synthesis)
    std::map<std::string, std::string> plans;          // claim -> plan answer
    std::string default_answer;                        // used when no key matches; empty = error

    std::string complete(const ModelRequest& request) override {
        calls_.fetch_add(1);
        const std::string& prompt = request.messages.empty() ? std::string() : request.messages.back().content;
        if (const auto claim = plan_claim_of_prompt(prompt)) {
            if (const auto it = plans.find(*claim); it != plans.end()) return it->second;
            if (!default_plan.empty()) return default_plan;
        } else if (const auto question = question_of_prompt(prompt)) {
            if (is_synthesis_prompt(prompt)) {
                if (const auto it = agent_answers.find(*question); it != agent_answers.end())
                    return it->second;
            }
            if (const auto it = answers.find(*question); it != answers.end()) return it->second;
        }
        if (!default_answer.empty()) return default_answer;
        throw ProviderError("mock backend has no fixture for this prompt");
    }

    std::string default_plan;

    int calls() const { return calls_.load(); }
    void reset_calls() { calls_.store(0); }

  private:
    std::atomic<int> calls_{0};
};

class MockSearchBackend : public SearchBackend {
  public:
    std::map<std::string, std::vector<SearchResult>> results;  // query -> canned results

    std::vector<SearchResult> search(const std::string& query, int k = 5) override {
        if (trim_view(query).empty()) throw std::domain_error("search query must be non-empty");
        calls_.fetch_add(1);
        const auto it = results.find(query);
        if (it == results.end()) return {};
        std::vector<SearchResult> out = it->second;
        if (k >= 0 && out.size() > static_cast<std::size_t>(k)) out.resize(static_cast<std::size_t>(k));
        return out;
    }

    int calls() const { return calls_.load(); }
    void reset_calls() { calls_.store(0); }

  private:
    std::atomic<int> calls_{0};
};

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

enum class CacheMode { Record, Replay, Passthrough };

namespace detail {

inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (const char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

inline std::string now_iso8601_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[72];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace detail

/// Stable cache key over model id, the full rendered messages, and the
/// temperature, so provider upgrades and prompt edits invalidate cleanly.
inline std::string request_cache_key(const ModelRequest& request) {
    std::string canon = request.model_id;
    canon.push_back('\x1f');
    for (const ChatMessage& m : request.messages) {
        canon += m.role;
        canon.push_back('\x1e');
        canon += m.content;
        canon.push_back('\x1d');
    }
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6g", request.temperature);
    canon += temp;
    return detail::hex64(detail::fnv1a(canon));
}

/// Append-safe JSON-lines cache of {key, response, timestamp}.
class ResponseCache {
  public:
    ResponseCache(std::string path, CacheMode mode) : path_(std::move(path)), mode_(mode) {
        if (mode_ == CacheMode::Passthrough) return;
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (trim_view(line).empty()) continue;
            try {
                const nlohmann::json j = nlohmann::json::parse(line);
                entries_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                // Torn trailing line from an interrupted run: ignore.
            }
        }
    }

    CacheMode mode() const { return mode_; }

    std::optional<std::string> lookup(const std::string& key) const {
        std::lock_guard lock(mu_);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    void store(const std::string& key, const std::string& response) {
        std::lock_guard lock(mu_);
        if (entries_.count(key)) return;
        entries_[key] = response;
        std::ofstream out(path_, std::ios::app);
        if (!out) throw ProviderError("cannot open cache file for append: " + path_);
        nlohmann::json j;
        j["key"] = key;
        j["response"] = response;
        j["timestamp"] = detail::now_iso8601_utc();
        out << j.dump() << '\n';
    }

  private:
    std::string path_;
    CacheMode mode_;
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

/// record: call inner and persist; replay: serve the cache or fail with
/// ReplayMiss; passthrough: no caching at all.
class RecordReplayModel : public ModelBackend {
  public:
    RecordReplayModel(std::shared_ptr<ModelBackend> inner, std::string cache_path, CacheMode mode)
        : inner_(std::move(inner)), cache_(std::move(cache_path), mode) {
        if (mode != CacheMode::Replay && !inner_)
            throw ProviderError("record/passthrough mode requires an inner backend");
    }

    std::string complete(const ModelRequest& request) override {
        if (cache_.mode() == CacheMode::Passthrough) return inner_->complete(request);
        const std::string key = request_cache_key(request);
        if (cache_.mode() == CacheMode::Replay) {
            if (const auto hit = cache_.lookup(key)) return *hit;
            throw ReplayMiss("replay cache miss for key " + key);
        }
        if (const auto hit = cache_.lookup(key)) return *hit;
        const std::string response = inner_->complete(request);
        cache_.store(key, response);
        return response;
    }

  private:
    std::shared_ptr<ModelBackend> inner_;
    ResponseCache cache_;
};

class RecordReplaySearch : public SearchBackend {
  public:
    RecordReplaySearch(std::shared_ptr<SearchBackend> inner, std::string cache_path, CacheMode mode)
        : inner_(std::move(inner)), cache_(std::move(cache_path), mode) {
        if (mode != CacheMode::Replay && !inner_)
            throw ProviderError("record/passthrough mode requires an inner backend");
    }

    std::vector<SearchResult> search(const std::string& query, int k = 5) override {
        if (trim_view(query).empty()) throw std::domain_error("search query must be non-empty");
        if (cache_.mode() == CacheMode::Passthrough) return inner_->search(query, k);
        const std::string key =
            detail::hex64(detail::fnv1a(query + "\x1f" + std::to_string(k), 1099511628211ull));
        if (const auto hit = cache_.lookup(key)) return decode_results(*hit);
        if (cache_.mode() == CacheMode::Replay) throw ReplayMiss("replay cache miss for query: " + query);
        const std::vector<SearchResult> results = inner_->search(query, k);
        nlohmann::json arr = nlohmann::json::array();
        for (const SearchResult& r : results)
            arr.push_back({{"title", r.title}, {"url", r.url}, {"snippet", r.snippet}});
        cache_.store(key, arr.dump());
        return results;
    }

  private:
    static std::vector<SearchResult> decode_results(const std::string& payload) {
        std::vector<SearchResult> out;
        const nlohmann::json arr = nlohmann::json::parse(payload);
        for (const auto& r : arr)
            out.push_back({r.value("title", ""), r.value("url", ""), r.value("snippet", "")});
        return out;
    }

    std::shared_ptr<SearchBackend> inner_;
    ResponseCache cache_;
};

// ---------------------------------------------------------------------------
// Built-in demo fixtures
// ---------------------------------------------------------------------------

/// Fixtures that make the offline `--backend mock` mode useful out of the
/// box: the five worked examples from the default bundle plus the three
/// fact-check statements used across the test corpus.
inline std::shared_ptr<MockModelBackend> make_demo_model_backend() {
    auto mock = std::make_shared<MockModelBackend>();
    for (const PromptExample& ex : default_bundle().examples) mock->answers[ex.input] = ex.output;

    const std::string mccain = "MoveOn.org says \"McCain opposes a woman's right to choose.\"";
    mock->answers[mccain] =
        "Veracity score: 80% (Mostly True), False Part: /, Reason: John McCain's public record "
        "and statements consistently showed that he was anti-abortion and supported overturning "
        "Roe v. Wade.";
    mock->agent_answers[mccain] =
        "Veracity score: 100% (True), False Part: /, Reason: McCain was pro-life and publicly "
        "stated his opposition to the Roe v. Wade decision, advocating for its overturn.";
    mock->plans[mccain] =
        "1. What was John McCain's public position on abortion?\n"
        "2. Did John McCain support overturning Roe v. Wade?";

    const std::string romney =
        "Mitt Romney says that illegal immigrants get a $100,000 break on University of Texas "
        "tuition over four years.";
    mock->answers[romney] =
        "Veracity score: 30% (Mostly False), False Part: $100,000 break, Reason: In-state "
        "tuition provisions existed for certain undocumented students, but the specific "
        "$100,000 figure is not substantiated.";
    mock->agent_answers[romney] =
        "Veracity score: 30% (Mostly False), False Part: $100,000 break over four years, "
        "Reason: The calculated difference based on 2011-12 tuition charges would be $90,800, "
        "and only a small share of the students involved attended UT.";
    mock->plans[romney] =
        "1. Do undocumented students qualify for in-state tuition at the University of Texas?\n"
        "2. How large is the in-state versus out-of-state tuition gap over four years?";

    const std::string nyt =
        "Facebook posts \"The New York Times published an old stock photo of a young girl and "
        "claimed Israeli forces killed her during its recent war with Hamas.\"";
    mock->agent_answers[nyt] =
        "Veracity score: 0% (False), False Part: The New York Times intentionally used an old "
        "photo claiming Israeli forces killed the girl recently, Reason: The Times did "
        "mistakenly use an old image, but the error was human error and a correction was "
        "issued.";
    mock->answers[nyt] =
        "Veracity score: 0% (False), False Part: published an old stock photo, Reason: The "
        "claim is not supported by evidence; such an error would have been widely reported and "
        "corrected.";
    mock->plans[nyt] =
        "1. Did The New York Times publish a photo of a girl reported killed by Israeli forces?\n"
        "2. Did The New York Times issue a correction about that photo?";

    // A subjective statement, judged non-verifiable.
    mock->answers["I think cats are better than dogs."] = "null";

    mock->default_answer = "Unable to judge.";
    mock->default_plan = "1. Is the claim supported by reliable sources?";
    return mock;
}

inline std::shared_ptr<MockSearchBackend> make_demo_search_backend() {
    auto mock = std::make_shared<MockSearchBackend>();
    mock->results["mccain roe v wade position"] = {
        {"McCain on abortion", "https://example.org/mccain-abortion",
         "Senator McCain has repeatedly stated that Roe v. Wade should be overturned."},
        {"2008 campaign positions", "https://example.org/campaign-2008",
         "The campaign site said he would nominate judges sharing that viewpoint."},
    };
    mock->results["What was John McCain's public position on abortion?"] = {
        {"McCain record", "https://example.org/record",
         "McCain described himself as pro-life throughout his Senate career."},
    };
    mock->results["Did John McCain support overturning Roe v. Wade?"] = {
        {"Roe statement", "https://example.org/roe",
         "He publicly stated his opposition to the Roe v. Wade decision."},
    };
    return mock;
}

}  // namespace verity
