#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pragmabench/errors.hpp"

namespace pragmabench::llm {

enum class Role {
    System,
    User,
    Assistant,
};

std::string_view role_token(Role role); // "system" / "user" / "assistant"
Role role_from_token(std::string_view token);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
    std::string provider_id;
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::vector<std::string> stop;

    bool operator==(const CompletionRequest&) const = default;
};

struct CompletionResponse {
    std::string text;
    std::optional<std::int64_t> prompt_tokens;
    std::optional<std::int64_t> completion_tokens;
    std::map<std::string, std::string> provider_meta;
    bool from_cache = false;
};

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 500;
    double backoff_multiplier = 2.0;
    std::set<ProviderErrorClass> retry_on = {
        ProviderErrorClass::RateLimited,
        ProviderErrorClass::Transient,
        ProviderErrorClass::Timeout,
    };

    bool retries(ProviderErrorClass klass) const { return retry_on.count(klass) > 0; }
};

// Uniform chat-completion interface. Implementations must be thread-safe and
// must never mutate the request. Failures are thrown as ProviderError with
// the class already determined.
class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// Throws ProviderError(BadRequest) for structurally invalid requests (empty
// message list, last message not from the user, empty user content,
// negative temperature, non-positive max_tokens). Runs before any network
// activity.
void validate_request(const CompletionRequest& request);

// Canonical byte serialization hashed by canonical_digest. Layout, in order,
// UTF-8 throughout:
//
//   provider_id '\n'
//   model '\n'
//   temperature with exactly 6 decimal places '\n'
//   max_tokens (decimal) '\n'
//   stop count (decimal) '\n' followed by each stop string '\n'
//   message count (decimal) '\n' followed by each message as
//     role token, 0x1F (unit separator), content, 0x1E (record separator)
//
// The counts make the serialization injective even when field values contain
// the delimiter bytes.
std::string canonical_bytes(const CompletionRequest& request);

// Lowercase-hex SHA-256 of canonical_bytes. Independent of in-memory
// representation; reproducible with any external SHA-256 tool over the
// documented bytes.
std::string canonical_digest(const CompletionRequest& request);

// JSON audit serialization of a request (used by tests and tooling; the
// cache stores canonical bytes, not this form).
std::string request_to_json(const CompletionRequest& request);
CompletionRequest request_from_json(std::string_view text);

using SleepFn = std::function<void(std::chrono::milliseconds)>;

// Calls client.complete, retrying failures whose class is in
// policy.retry_on with exponential backoff. Non-retryable classes
// (AuthError, BadRequest) are rethrown after exactly one attempt.
CompletionResponse complete_with_retry(CompletionClient& client,
                                       const CompletionRequest& request,
                                       const RetryPolicy& policy,
                                       const SleepFn& sleep_fn = {});

} // namespace pragmabench::llm
