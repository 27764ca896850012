#include "pragmabench/llm_cache.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace pragmabench::llm {

namespace fs = std::filesystem;

namespace {

std::string unique_temp_suffix() {
    static std::atomic<std::uint64_t> counter{0};
    return ".tmp." + std::to_string(::getpid()) + "." +
           std::to_string(counter.fetch_add(1));
}

bool looks_like_digest(const std::string& name) {
    if (name.size() != 64) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](unsigned char c) {
        return std::isxdigit(c) && !std::isupper(c);
    });
}

} // namespace

ResponseCache::ResponseCache(fs::path directory) : directory_(std::move(directory)) {}

fs::path ResponseCache::entry_path(std::string_view digest) const {
    return directory_ / std::string(digest.substr(0, 2)) / std::string(digest);
}

std::optional<std::string> ResponseCache::lookup(const CompletionRequest& request) const {
    const std::string canonical = canonical_bytes(request);
    const fs::path path = entry_path(canonical_digest(request));

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string entry = buffer.str();

    const std::string expected_prefix = canonical + std::string(kCacheSeparator);
    if (entry.size() < expected_prefix.size() ||
        entry.compare(0, expected_prefix.size(), expected_prefix) != 0) {
        std::cerr << "warning: corrupt cache entry " << path.string()
                  << ", treating as a miss\n";
        return std::nullopt;
    }
    return entry.substr(expected_prefix.size());
}

void ResponseCache::store(const CompletionRequest& request, std::string_view response_text) const {
    const std::string digest = canonical_digest(request);
    const fs::path path = entry_path(digest);
    fs::create_directories(path.parent_path());

    // Unique temp name per writer; rename makes the publish atomic.
    const fs::path temp = path.parent_path() / (digest + unique_temp_suffix());
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(Errc::Io, "cannot write cache entry '" + temp.string() + "'");
        }
        out << canonical_bytes(request) << kCacheSeparator << response_text;
    }
    std::error_code ec;
    fs::rename(temp, path, ec);
    if (ec) {
        fs::remove(temp);
        throw Error(Errc::Io, "cannot publish cache entry '" + path.string() + "': " + ec.message());
    }
}

CacheStats ResponseCache::stats() const {
    CacheStats stats;
    if (!fs::exists(directory_)) {
        return stats;
    }
    for (const auto& entry : fs::recursive_directory_iterator(directory_)) {
        if (entry.is_regular_file() && looks_like_digest(entry.path().filename().string())) {
            stats.entries++;
            stats.bytes += entry.file_size();
        }
    }
    return stats;
}

std::size_t ResponseCache::clear() const {
    std::size_t removed = 0;
    if (!fs::exists(directory_)) {
        return removed;
    }
    for (const auto& entry : fs::recursive_directory_iterator(directory_)) {
        if (entry.is_regular_file() && looks_like_digest(entry.path().filename().string())) {
            if (fs::remove(entry.path())) {
                removed++;
            }
        }
    }
    return removed;
}

CachingClient::CachingClient(CompletionClient& inner, fs::path cache_dir, RetryPolicy policy,
                             SleepFn sleep_fn)
    : inner_(inner), cache_(std::move(cache_dir)), policy_(policy),
      sleep_fn_(std::move(sleep_fn)) {}

CompletionResponse CachingClient::complete(const CompletionRequest& request) {
    validate_request(request);
    if (auto hit = cache_.lookup(request)) {
        CompletionResponse response;
        response.text = std::move(*hit);
        response.from_cache = true;
        response.provider_meta["cache"] = "hit";
        return response;
    }
    CompletionResponse response = complete_with_retry(inner_, request, policy_, sleep_fn_);
    cache_.store(request, response.text);
    response.from_cache = false;
    return response;
}

CompletionResponse cached_complete(CompletionClient& client, const CompletionRequest& request,
                                   const fs::path& cache_dir, const RetryPolicy& policy) {
    CachingClient caching(client, cache_dir, policy);
    return caching.complete(request);
}

} // namespace pragmabench::llm
