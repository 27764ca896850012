#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "pragmabench/llm.hpp"

namespace pragmabench::llm {

// Cache entry file layout: the request's canonical bytes, this separator
// line, then the response text, UTF-8 throughout. Lookups verify the stored
// canonical bytes against the request in hand, so a spurious separator inside
// prompt text cannot yield a wrong response.
inline constexpr std::string_view kCacheSeparator = "\n-----pragmabench response-----\n";

struct CacheStats {
    std::size_t entries = 0;
    std::uintmax_t bytes = 0;
};

// Content-addressed on-disk response cache. One file per request digest under
// a two-character fan-out directory; writes go through a temp file and an
// atomic rename, so concurrent writers of the same digest are safe.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path directory);

    const std::filesystem::path& directory() const { return directory_; }
    std::filesystem::path entry_path(std::string_view digest) const;

    // Returns the stored response text, or nullopt on miss. A corrupt entry
    // (bad prefix or missing separator) logs a warning and reads as a miss.
    std::optional<std::string> lookup(const CompletionRequest& request) const;

    void store(const CompletionRequest& request, std::string_view response_text) const;

    CacheStats stats() const;

    // Removes all cache entries under the directory; returns how many.
    std::size_t clear() const;

private:
    std::filesystem::path directory_;
};

// Client decorator: cache hits return the stored text with from_cache=true
// and zero provider calls; misses go through complete_with_retry and are
// persisted before returning.
class CachingClient : public CompletionClient {
public:
    CachingClient(CompletionClient& inner, std::filesystem::path cache_dir,
                  RetryPolicy policy = {}, SleepFn sleep_fn = {});

    CompletionResponse complete(const CompletionRequest& request) override;

private:
    CompletionClient& inner_;
    ResponseCache cache_;
    RetryPolicy policy_;
    SleepFn sleep_fn_;
};

CompletionResponse cached_complete(CompletionClient& client, const CompletionRequest& request,
                                   const std::filesystem::path& cache_dir,
                                   const RetryPolicy& policy = {});

} // namespace pragmabench::llm
