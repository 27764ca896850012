#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "pragmabench/llm.hpp"

namespace pragmabench::llm {

// Two remote wire dialects are supported; base URLs are configurable so no
// vendor is hard-wired. OpenAiChat also covers local openai-compatible
// servers for open models.
enum class Dialect {
    OpenAiChat,
    AnthropicMessages,
};

struct ProviderConfig {
    std::string id;
    Dialect dialect = Dialect::OpenAiChat;
    std::string base_url;
    std::string api_key;
    int connect_timeout_s = 10;
    int read_timeout_s = 180;
};

// Builds provider settings from the environment:
//   PRAGMABENCH_<PROVIDER>_URL      base URL (defaults exist for openai/anthropic)
//   PRAGMABENCH_<PROVIDER>_KEY      API key
//   PRAGMABENCH_<PROVIDER>_DIALECT  "openai" | "anthropic" (defaults by id)
ProviderConfig provider_from_env(std::string_view provider_id);

// Token-bucket limiter bounding both in-flight requests and requests per
// minute. A zero limit disables that bound. The clock is injectable for
// tests.
class RateLimiter {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    RateLimiter(int max_in_flight, double requests_per_minute, Clock clock = {});

    class Token {
    public:
        Token(Token&& other) noexcept;
        Token(const Token&) = delete;
        Token& operator=(const Token&) = delete;
        Token& operator=(Token&&) = delete;
        ~Token();

    private:
        friend class RateLimiter;
        explicit Token(RateLimiter* limiter) : limiter_(limiter) {}
        RateLimiter* limiter_;
    };

    // Blocks until both an in-flight slot and a rate token are available.
    Token acquire();

    int in_flight() const;

private:
    void release();
    std::chrono::steady_clock::time_point now() const;

    const int max_in_flight_;
    const double requests_per_minute_;
    Clock clock_;

    mutable std::mutex mutex_;
    std::condition_variable slot_available_;
    int in_flight_ = 0;
    double tokens_;
    std::chrono::steady_clock::time_point last_refill_;
};

// HTTP chat-completion client for one provider endpoint. Thread-safe; each
// call opens its own connection. Failures are classified into the standard
// provider error classes from HTTP status / transport errors.
class HttpCompletionClient : public CompletionClient {
public:
    explicit HttpCompletionClient(ProviderConfig config,
                                  std::shared_ptr<RateLimiter> limiter = nullptr);

    CompletionResponse complete(const CompletionRequest& request) override;

    const ProviderConfig& config() const { return config_; }

private:
    ProviderConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
};

// Request/response body translation, exposed for tests.
std::string build_provider_body(Dialect dialect, const CompletionRequest& request);
CompletionResponse parse_provider_response(Dialect dialect, const std::string& body);
ProviderErrorClass classify_status(int status);

} // namespace pragmabench::llm
