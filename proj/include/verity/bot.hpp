#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "verity/provider.hpp"
#include "verity/unicode.hpp"

namespace verity {

struct BotUpdate {
    std::int64_t update_id = 0;
    std::int64_t chat_id = 0;
    std::optional<std::string> message_text;
};

struct BotOptions {
    std::string api_base = "https://api.telegram.org";  // overridable for tests
    std::string token_env = "VERITY_BOT_TOKEN";
    int poll_timeout_s = 25;
    std::chrono::milliseconds poll_interval{0};  // extra delay between polls
    RetryPolicy retry{.max_attempts = 5, .base_backoff = std::chrono::milliseconds(250)};
};

inline constexpr std::string_view kBotHelpText =
    "Send me a statement and I will assess its veracity:\n"
    "- a score from 0% (False) to 100% (True)\n"
    "- the false part of the statement, if any\n"
    "- a short reason for the judgment";

inline constexpr std::string_view kBotApologyText =
    "Sorry, something went wrong while checking that statement. Please try again.";

/// getUpdates/sendMessage long-polling loop. Every update is acknowledged
/// exactly once via the offset cursor and deduplicated by update_id, so
/// duplicate deliveries never produce duplicate replies. Pipeline failures
/// are answered with an apology line and never crash the loop.
class BotLoop {
  public:
    /// answer_fn maps a user statement to the reply text; it may throw.
    BotLoop(BotOptions options, std::function<std::string(const std::string&)> answer_fn)
        : options_(std::move(options)), answer_fn_(std::move(answer_fn)) {
        const char* token = std::getenv(options_.token_env.c_str());
        if (!token || !*token)
            throw std::runtime_error("bot token environment variable " + options_.token_env +
                                     " is not set");
        token_ = token;
    }

    void stop() { stop_.store(true); }
    bool stopped() const { return stop_.load(); }

    /// Blocks until stop(). Each iteration long-polls once and replies to
    /// every fresh text message in arrival order.
    void run() {
        while (!stop_.load()) {
            std::vector<BotUpdate> updates;
            try {
                updates = poll_once();
            } catch (const ProviderError&) {
                // Transient API failure already retried inside; keep polling.
                sleep_between_polls();
                continue;
            }
            for (const BotUpdate& update : updates) {
                if (stop_.load()) break;  // in-flight replies finish; unacked updates redeliver
                handle(update);
            }
            sleep_between_polls();
        }
    }

    /// One getUpdates round-trip; exposed for tests. Advances the offset
    /// cursor past everything returned.
    std::vector<BotUpdate> poll_once() {
        nlohmann::json payload = request_with_retry(
            "/bot" + token_ + "/getUpdates?offset=" + std::to_string(offset_) +
            "&timeout=" + std::to_string(options_.poll_timeout_s));
        std::vector<BotUpdate> fresh;
        if (!payload.value("ok", false) || !payload.contains("result")) return fresh;
        for (const auto& u : payload["result"]) {
            BotUpdate update;
            update.update_id = u.value("update_id", std::int64_t{0});
            if (u.contains("message")) {
                const auto& m = u["message"];
                if (m.contains("chat")) update.chat_id = m["chat"].value("id", std::int64_t{0});
                if (m.contains("text")) update.message_text = m["text"].get<std::string>();
            }
            if (update.update_id >= offset_) offset_ = update.update_id + 1;
            if (last_processed_ && update.update_id <= *last_processed_) continue;  // duplicate delivery
            last_processed_ = update.update_id;
            fresh.push_back(std::move(update));
        }
        return fresh;
    }

    void handle(const BotUpdate& update) {
        if (!update.message_text || update.chat_id == 0) return;
        const std::string text = trim_copy(*update.message_text);
        if (text.empty()) return;
        std::string reply;
        if (text == "/start" || text == "/help") {
            reply = std::string(kBotHelpText);
        } else {
            try {
                reply = answer_fn_(text);
            } catch (...) {
                reply = std::string(kBotApologyText);
            }
        }
        try {
            send_message(update.chat_id, reply);
        } catch (const ProviderError&) {
            // Delivery failed after retries; drop rather than wedge the loop.
        }
    }

    void send_message(std::int64_t chat_id, const std::string& text) {
        nlohmann::json body;
        body["chat_id"] = chat_id;
        body["text"] = text;
        request_with_retry("/bot" + token_ + "/sendMessage", body.dump());
        ++replies_sent_;
    }

    std::int64_t offset() const { return offset_; }
    int replies_sent() const { return replies_sent_; }

  private:
    void sleep_between_polls() {
        if (options_.poll_interval.count() > 0) std::this_thread::sleep_for(options_.poll_interval);
    }

    nlohmann::json request_with_retry(const std::string& path, std::optional<std::string> body = {}) {
        std::string last_error;
        for (int attempt = 0; attempt < options_.retry.max_attempts; ++attempt) {
            if (attempt > 0) {
                auto delay = options_.retry.base_backoff * (1LL << std::min(attempt - 1, 10));
                std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(
                    std::chrono::duration_cast<std::chrono::milliseconds>(delay),
                    std::chrono::seconds(10)));
            }
            httplib::Client client(options_.api_base);
            client.set_read_timeout(std::chrono::seconds(options_.poll_timeout_s + 10));
            httplib::Result res = body ? client.Post(path, *body, "application/json") : client.Get(path);
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500 || res->status == 429) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw ProviderError("bot API returned HTTP " + std::to_string(res->status));
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw MalformedResponse(std::string("bot API payload is not JSON: ") + e.what());
            }
        }
        throw TransientExhausted("bot API retries exhausted; last error: " + last_error);
    }

    BotOptions options_;
    std::function<std::string(const std::string&)> answer_fn_;
    std::string token_;
    std::int64_t offset_ = 0;
    std::optional<std::int64_t> last_processed_;
    std::atomic<bool> stop_{false};
    int replies_sent_ = 0;
};

}  // namespace verity
