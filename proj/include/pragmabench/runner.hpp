#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pragmabench/datasets.hpp"
#include "pragmabench/strategies.hpp"

namespace pragmabench::runner {

// Frozen run configuration. Everything needed to reproduce a mock-mode run
// lives here; changing any field means a new run_id.
struct RunManifest {
    std::string run_id;
    std::string dataset_id;
    std::string dataset_digest;
    std::string dataset_source;
    strategies::StrategyId strategy = strategies::StrategyId::PMP;
    std::string provider_id;
    std::string model;
    double temperature = 0.0;
    int stage1_max_tokens = 1024;
    int stage2_max_tokens = 512;
    std::uint64_t seed = 0;
    std::optional<std::size_t> limit;
    int concurrency = 1;
    UnparseablePolicy unparseable_policy = UnparseablePolicy::CountAsWrong;
    // Template-selection id; equals dataset_id unless a prompt style override
    // is in effect.
    std::string prompt_dataset;
    // Mock mode token ("echo-gold", "fixed-sarcastic", ...) or empty for a
    // real provider; recorded so a manifest alone reproduces mock runs.
    std::string mock_mode;
    std::string started_at;  // ISO-8601 UTC; excluded from determinism checks
    std::string finished_at;
    std::string harness_version;
};

struct RunResult {
    RunManifest manifest;
    std::vector<strategies::PredictionRecord> records; // dataset order
    MetricsSummary metrics;
};

struct RunOptions {
    std::filesystem::path run_dir;
    // Optional cooperative stop: when set to true (e.g. from a SIGINT
    // handler) the coordinator stops dispatching, flushes what completed and
    // returns the partial result.
    std::atomic<bool>* stop_requested = nullptr;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kRecordLogFile = "records.jsonl";
inline constexpr const char* kMetricsFile = "metrics.json";

// SHA-256 over the dataset's normalized interchange serialization; binds a
// run directory to the exact data it scored.
std::string dataset_digest(const datasets::Dataset& dataset);

// Deterministic default run id derived from the manifest's configuration
// fields (timestamps excluded).
std::string derive_run_id(const RunManifest& manifest);

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text);
void save_manifest(const RunManifest& manifest, const std::filesystem::path& run_dir);
RunManifest load_manifest(const std::filesystem::path& run_dir);

// One JSON line per record; verdict serialized as
// "sarcastic"/"not_sarcastic"/"unparseable".
std::string record_to_json_line(const strategies::PredictionRecord& record);
strategies::PredictionRecord record_from_json_line(std::string_view line);

// Narrowing from manifest to the per-call execution settings.
strategies::ExecutionConfig execution_config(const RunManifest& manifest);

// Evaluates every selected sample exactly once: workers execute strategy
// stages sequentially per sample, completed records are appended to the
// record log as they finish, and the final result is re-sorted into dataset
// order. Per-sample provider failures produce error records and the run
// continues; AuthError aborts.
RunResult run_evaluation(RunManifest manifest, const datasets::Dataset& dataset,
                         llm::CompletionClient& client, const RunOptions& options);

// Continues a run directory: already-logged samples are skipped with zero
// provider calls, corrupt log lines are re-evaluated (last valid line wins),
// and the dataset digest must match the manifest. With a deterministic
// client the final result is identical to an uninterrupted run.
RunResult resume(const std::filesystem::path& run_dir, const datasets::Dataset& dataset,
                 llm::CompletionClient& client, std::atomic<bool>* stop_requested = nullptr);

} // namespace pragmabench::runner
