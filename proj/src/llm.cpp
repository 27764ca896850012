#include "pragmabench/llm.hpp"

#include <cstdio>
#include <thread>

#include <json.hpp>

#include "pragmabench/sha256.hpp"

namespace pragmabench::llm {

using nlohmann::json;

std::string_view role_token(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

Role role_from_token(std::string_view token) {
    if (token == "system") {
        return Role::System;
    }
    if (token == "user") {
        return Role::User;
    }
    if (token == "assistant") {
        return Role::Assistant;
    }
    throw Error(Errc::Format, "unknown chat role '" + std::string(token) + "'");
}

void validate_request(const CompletionRequest& request) {
    if (request.messages.empty()) {
        throw ProviderError(ProviderErrorClass::BadRequest, "request has no messages");
    }
    if (request.messages.back().role != Role::User) {
        throw ProviderError(ProviderErrorClass::BadRequest, "last message must be from the user");
    }
    for (const auto& message : request.messages) {
        if (message.role == Role::User && message.content.empty()) {
            throw ProviderError(ProviderErrorClass::BadRequest, "user message content is empty");
        }
    }
    if (request.temperature < 0.0) {
        throw ProviderError(ProviderErrorClass::BadRequest, "temperature must be >= 0");
    }
    if (request.max_tokens <= 0) {
        throw ProviderError(ProviderErrorClass::BadRequest, "max_tokens must be positive");
    }
}

std::string canonical_bytes(const CompletionRequest& request) {
    constexpr char kUnitSeparator = '\x1f';
    constexpr char kRecordSeparator = '\x1e';

    std::string out;
    out += request.provider_id;
    out += '\n';
    out += request.model;
    out += '\n';
    char temperature[32];
    std::snprintf(temperature, sizeof(temperature), "%.6f", request.temperature);
    out += temperature;
    out += '\n';
    out += std::to_string(request.max_tokens);
    out += '\n';
    out += std::to_string(request.stop.size());
    out += '\n';
    for (const auto& stop : request.stop) {
        out += stop;
        out += '\n';
    }
    out += std::to_string(request.messages.size());
    out += '\n';
    for (const auto& message : request.messages) {
        out += role_token(message.role);
        out += kUnitSeparator;
        out += message.content;
        out += kRecordSeparator;
    }
    return out;
}

std::string canonical_digest(const CompletionRequest& request) {
    return sha256_hex(canonical_bytes(request));
}

std::string request_to_json(const CompletionRequest& request) {
    json messages = json::array();
    for (const auto& message : request.messages) {
        messages.push_back({{"role", std::string(role_token(message.role))},
                            {"content", message.content}});
    }
    const json body = {
        {"provider_id", request.provider_id},
        {"model", request.model},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"stop", request.stop},
    };
    return body.dump();
}

CompletionRequest request_from_json(std::string_view text) {
    json body;
    try {
        body = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::Format, std::string("request JSON: ") + e.what());
    }
    CompletionRequest request;
    request.provider_id = body.at("provider_id").get<std::string>();
    request.model = body.at("model").get<std::string>();
    for (const auto& message : body.at("messages")) {
        request.messages.push_back(ChatMessage{
            role_from_token(message.at("role").get<std::string>()),
            message.at("content").get<std::string>(),
        });
    }
    request.temperature = body.at("temperature").get<double>();
    request.max_tokens = body.at("max_tokens").get<int>();
    if (body.contains("stop")) {
        request.stop = body.at("stop").get<std::vector<std::string>>();
    }
    return request;
}

CompletionResponse complete_with_retry(CompletionClient& client,
                                       const CompletionRequest& request,
                                       const RetryPolicy& policy,
                                       const SleepFn& sleep_fn) {
    validate_request(request);
    const int max_attempts = std::max(policy.max_attempts, 1);
    double backoff_ms = static_cast<double>(policy.base_backoff_ms);
    for (int attempt = 1;; ++attempt) {
        try {
            return client.complete(request);
        } catch (const ProviderError& e) {
            // AuthError and BadRequest are never retryable, whatever the
            // policy says.
            const bool retryable = e.klass() != ProviderErrorClass::AuthError &&
                                   e.klass() != ProviderErrorClass::BadRequest &&
                                   policy.retries(e.klass());
            if (!retryable || attempt >= max_attempts) {
                throw;
            }
        }
        const auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(backoff_ms));
        if (sleep_fn) {
            sleep_fn(delay);
        } else {
            std::this_thread::sleep_for(delay);
        }
        backoff_ms *= policy.backoff_multiplier;
    }
}

} // namespace pragmabench::llm
