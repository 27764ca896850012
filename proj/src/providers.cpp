#include "pragmabench/providers.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace pragmabench::llm {

using nlohmann::json;

namespace {

std::string upper_snake(std::string_view id) {
    std::string out;
    out.reserve(id.size());
    for (const char c : id) {
        if (c == '-' || c == '.') {
            out.push_back('_');
        } else {
            out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

std::string env_or(const std::string& name, const std::string& fallback) {
    const char* value = std::getenv(name.c_str());
    return value ? std::string(value) : fallback;
}

} // namespace

ProviderConfig provider_from_env(std::string_view provider_id) {
    ProviderConfig config;
    config.id = std::string(provider_id);
    const std::string prefix = "PRAGMABENCH_" + upper_snake(provider_id);

    std::string default_url;
    std::string default_dialect = "openai";
    if (provider_id == "openai") {
        default_url = "https://api.openai.com";
    } else if (provider_id == "anthropic") {
        default_url = "https://api.anthropic.com";
        default_dialect = "anthropic";
    }

    config.base_url = env_or(prefix + "_URL", default_url);
    if (config.base_url.empty()) {
        throw Error(Errc::Config, "provider '" + config.id + "' has no base URL; set " +
                                      prefix + "_URL");
    }
    config.api_key = env_or(prefix + "_KEY", "");
    const std::string dialect = env_or(prefix + "_DIALECT", default_dialect);
    if (dialect == "openai") {
        config.dialect = Dialect::OpenAiChat;
    } else if (dialect == "anthropic") {
        config.dialect = Dialect::AnthropicMessages;
    } else {
        throw Error(Errc::Config, "unknown provider dialect '" + dialect + "'");
    }
    return config;
}

RateLimiter::RateLimiter(int max_in_flight, double requests_per_minute, Clock clock)
    : max_in_flight_(max_in_flight), requests_per_minute_(requests_per_minute),
      clock_(std::move(clock)), tokens_(requests_per_minute > 0 ? 1.0 : 0.0) {
    last_refill_ = now();
}

std::chrono::steady_clock::time_point RateLimiter::now() const {
    return clock_ ? clock_() : std::chrono::steady_clock::now();
}

RateLimiter::Token::Token(Token&& other) noexcept : limiter_(other.limiter_) {
    other.limiter_ = nullptr;
}

RateLimiter::Token::~Token() {
    if (limiter_) {
        limiter_->release();
    }
}

RateLimiter::Token RateLimiter::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
        if (requests_per_minute_ > 0) {
            const auto current = now();
            const double elapsed_s =
                std::chrono::duration<double>(current - last_refill_).count();
            tokens_ = std::min(requests_per_minute_,
                               tokens_ + elapsed_s * requests_per_minute_ / 60.0);
            last_refill_ = current;
        }
        const bool slot_free = max_in_flight_ <= 0 || in_flight_ < max_in_flight_;
        const bool token_free = requests_per_minute_ <= 0 || tokens_ >= 1.0;
        if (slot_free && token_free) {
            break;
        }
        slot_available_.wait_for(lock, std::chrono::milliseconds(20));
    }
    in_flight_++;
    if (requests_per_minute_ > 0) {
        tokens_ -= 1.0;
    }
    return Token(this);
}

void RateLimiter::release() {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        in_flight_--;
    }
    slot_available_.notify_all();
}

int RateLimiter::in_flight() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return in_flight_;
}

std::string build_provider_body(Dialect dialect, const CompletionRequest& request) {
    if (dialect == Dialect::OpenAiChat) {
        json messages = json::array();
        for (const auto& message : request.messages) {
            messages.push_back({{"role", std::string(role_token(message.role))},
                                {"content", message.content}});
        }
        json body = {
            {"model", request.model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };
        if (!request.stop.empty()) {
            body["stop"] = request.stop;
        }
        return body.dump();
    }

    // Anthropic: system messages move to the top-level field; the messages
    // list carries only user/assistant turns.
    std::string system_text;
    json messages = json::array();
    for (const auto& message : request.messages) {
        if (message.role == Role::System) {
            if (!system_text.empty()) {
                system_text += '\n';
            }
            system_text += message.content;
            continue;
        }
        messages.push_back({{"role", std::string(role_token(message.role))},
                            {"content", message.content}});
    }
    json body = {
        {"model", request.model},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    if (!system_text.empty()) {
        body["system"] = system_text;
    }
    if (!request.stop.empty()) {
        body["stop_sequences"] = request.stop;
    }
    return body.dump();
}

CompletionResponse parse_provider_response(Dialect dialect, const std::string& body) {
    json root;
    try {
        root = json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderError(ProviderErrorClass::Transient,
                            std::string("unparseable provider response: ") + e.what());
    }
    CompletionResponse response;
    try {
        if (dialect == Dialect::OpenAiChat) {
            response.text = root.at("choices").at(0).at("message").at("content").get<std::string>();
            if (root.contains("usage")) {
                const json& usage = root.at("usage");
                if (usage.contains("prompt_tokens")) {
                    response.prompt_tokens = usage.at("prompt_tokens").get<std::int64_t>();
                }
                if (usage.contains("completion_tokens")) {
                    response.completion_tokens = usage.at("completion_tokens").get<std::int64_t>();
                }
            }
        } else {
            response.text = root.at("content").at(0).at("text").get<std::string>();
            if (root.contains("usage")) {
                const json& usage = root.at("usage");
                if (usage.contains("input_tokens")) {
                    response.prompt_tokens = usage.at("input_tokens").get<std::int64_t>();
                }
                if (usage.contains("output_tokens")) {
                    response.completion_tokens = usage.at("output_tokens").get<std::int64_t>();
                }
            }
        }
        if (root.contains("id") && root.at("id").is_string()) {
            response.provider_meta["response_id"] = root.at("id").get<std::string>();
        }
        if (root.contains("model") && root.at("model").is_string()) {
            response.provider_meta["model"] = root.at("model").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ProviderError(ProviderErrorClass::Transient,
                            std::string("provider response missing fields: ") + e.what());
    }
    return response;
}

ProviderErrorClass classify_status(int status) {
    switch (status) {
    case 401:
    case 403:
        return ProviderErrorClass::AuthError;
    case 408:
        return ProviderErrorClass::Timeout;
    case 429:
        return ProviderErrorClass::RateLimited;
    default:
        break;
    }
    if (status >= 400 && status < 500) {
        return ProviderErrorClass::BadRequest;
    }
    return ProviderErrorClass::Transient;
}

HttpCompletionClient::HttpCompletionClient(ProviderConfig config,
                                           std::shared_ptr<RateLimiter> limiter)
    : config_(std::move(config)), limiter_(std::move(limiter)) {}

CompletionResponse HttpCompletionClient::complete(const CompletionRequest& request) {
    validate_request(request);

    std::optional<RateLimiter::Token> token;
    if (limiter_) {
        token.emplace(limiter_->acquire());
    }

    httplib::Client http(config_.base_url);
    http.set_connection_timeout(config_.connect_timeout_s, 0);
    http.set_read_timeout(config_.read_timeout_s, 0);

    httplib::Headers headers;
    std::string path;
    if (config_.dialect == Dialect::OpenAiChat) {
        path = "/v1/chat/completions";
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
    } else {
        path = "/v1/messages";
        if (!config_.api_key.empty()) {
            headers.emplace("x-api-key", config_.api_key);
        }
        headers.emplace("anthropic-version", "2023-06-01");
    }

    const std::string body = build_provider_body(config_.dialect, request);
    const httplib::Result result = http.Post(path, headers, body, "application/json");

    if (!result) {
        const auto err = result.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write) {
            throw ProviderError(ProviderErrorClass::Timeout,
                                "transport timeout talking to " + config_.base_url + ": " +
                                    httplib::to_string(err));
        }
        throw ProviderError(ProviderErrorClass::Transient,
                            "transport error talking to " + config_.base_url + ": " +
                                httplib::to_string(err));
    }
    if (result->status != 200) {
        const ProviderErrorClass klass = classify_status(result->status);
        std::string detail = result->body.substr(0, 512);
        throw ProviderError(klass, "provider '" + config_.id + "' returned HTTP " +
                                       std::to_string(result->status) + ": " + detail);
    }

    CompletionResponse response = parse_provider_response(config_.dialect, result->body);
    response.provider_meta["provider"] = config_.id;
    return response;
}

} // namespace pragmabench::llm
