#include "pragmabench/runner.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pragmabench/report.hpp"
#include "pragmabench/sha256.hpp"
#include "pragmabench/version.hpp"

namespace pragmabench::runner {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buffer;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

std::string dataset_digest(const datasets::Dataset& dataset) {
    return sha256_hex(datasets::interchange_serialize(dataset));
}

std::string derive_run_id(const RunManifest& manifest) {
    std::string key;
    key += manifest.dataset_id + "\n";
    key += manifest.dataset_digest + "\n";
    key += std::string(strategies::strategy_token(manifest.strategy)) + "\n";
    key += manifest.provider_id + "\n";
    key += manifest.model + "\n";
    char temperature[32];
    std::snprintf(temperature, sizeof(temperature), "%.6f", manifest.temperature);
    key += std::string(temperature) + "\n";
    key += std::to_string(manifest.stage1_max_tokens) + "\n";
    key += std::to_string(manifest.stage2_max_tokens) + "\n";
    key += std::to_string(manifest.seed) + "\n";
    key += (manifest.limit ? std::to_string(*manifest.limit) : "all") + "\n";
    key += std::string(unparseable_policy_token(manifest.unparseable_policy)) + "\n";
    key += manifest.prompt_dataset + "\n";
    key += manifest.mock_mode + "\n";
    return "run-" + sha256_hex(key).substr(0, 12);
}

std::string manifest_to_json(const RunManifest& manifest) {
    json body = {
        {"run_id", manifest.run_id},
        {"dataset_id", manifest.dataset_id},
        {"dataset_digest", manifest.dataset_digest},
        {"dataset_source", manifest.dataset_source},
        {"strategy", std::string(strategies::strategy_token(manifest.strategy))},
        {"provider_id", manifest.provider_id},
        {"model", manifest.model},
        {"temperature", manifest.temperature},
        {"stage1_max_tokens", manifest.stage1_max_tokens},
        {"stage2_max_tokens", manifest.stage2_max_tokens},
        {"seed", manifest.seed},
        {"concurrency", manifest.concurrency},
        {"unparseable_policy", std::string(unparseable_policy_token(manifest.unparseable_policy))},
        {"prompt_dataset", manifest.prompt_dataset},
        {"mock_mode", manifest.mock_mode},
        {"started_at", manifest.started_at},
        {"finished_at", manifest.finished_at},
        {"harness_version", manifest.harness_version},
    };
    if (manifest.limit) {
        body["limit"] = *manifest.limit;
    } else {
        body["limit"] = nullptr;
    }
    return body.dump(2);
}

RunManifest manifest_from_json(std::string_view text) {
    json body;
    try {
        body = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::Format, std::string("manifest: not valid JSON: ") + e.what());
    }
    RunManifest manifest;
    try {
        manifest.run_id = body.at("run_id").get<std::string>();
        manifest.dataset_id = body.at("dataset_id").get<std::string>();
        manifest.dataset_digest = body.at("dataset_digest").get<std::string>();
        manifest.dataset_source = body.value("dataset_source", std::string());
        manifest.strategy = strategies::strategy_from_token(body.at("strategy").get<std::string>());
        manifest.provider_id = body.at("provider_id").get<std::string>();
        manifest.model = body.at("model").get<std::string>();
        manifest.temperature = body.at("temperature").get<double>();
        manifest.stage1_max_tokens = body.at("stage1_max_tokens").get<int>();
        manifest.stage2_max_tokens = body.at("stage2_max_tokens").get<int>();
        manifest.seed = body.at("seed").get<std::uint64_t>();
        if (body.contains("limit") && !body.at("limit").is_null()) {
            manifest.limit = body.at("limit").get<std::size_t>();
        }
        manifest.concurrency = body.at("concurrency").get<int>();
        manifest.unparseable_policy =
            unparseable_policy_from_token(body.at("unparseable_policy").get<std::string>());
        manifest.prompt_dataset = body.at("prompt_dataset").get<std::string>();
        manifest.mock_mode = body.value("mock_mode", std::string());
        manifest.started_at = body.value("started_at", std::string());
        manifest.finished_at = body.value("finished_at", std::string());
        manifest.harness_version = body.value("harness_version", std::string());
    } catch (const json::exception& e) {
        throw Error(Errc::Format, std::string("manifest: missing field: ") + e.what());
    }
    return manifest;
}

void save_manifest(const RunManifest& manifest, const fs::path& run_dir) {
    fs::create_directories(run_dir);
    std::ofstream out(run_dir / kManifestFile, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::Io, "cannot write manifest in '" + run_dir.string() + "'");
    }
    out << manifest_to_json(manifest) << '\n';
}

RunManifest load_manifest(const fs::path& run_dir) {
    return manifest_from_json(read_file(run_dir / kManifestFile));
}

std::string record_to_json_line(const strategies::PredictionRecord& record) {
    json transcripts = json::array();
    for (const auto& stage : record.stage_transcripts) {
        transcripts.push_back({{"prompt", stage.prompt}, {"response", stage.response}});
    }
    json cached = json::array();
    for (const bool flag : record.cached_stages) {
        cached.push_back(flag);
    }
    json body = {
        {"sample_id", record.sample_id},
        {"strategy", std::string(strategies::strategy_token(record.strategy))},
        {"model", record.model},
        {"stage_transcripts", std::move(transcripts)},
        {"verdict", record.verdict.is_decided()
                        ? std::string(label_token(record.verdict.label()))
                        : std::string("unparseable")},
        {"cached_stages", std::move(cached)},
        {"elapsed_ms", record.elapsed_ms},
    };
    if (record.error) {
        body["error"] = *record.error;
    }
    return body.dump();
}

strategies::PredictionRecord record_from_json_line(std::string_view line) {
    json body;
    try {
        body = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(Errc::Format, std::string("record line: not valid JSON: ") + e.what());
    }
    strategies::PredictionRecord record;
    try {
        record.sample_id = body.at("sample_id").get<std::string>();
        record.strategy = strategies::strategy_from_token(body.at("strategy").get<std::string>());
        record.model = body.at("model").get<std::string>();
        for (const auto& stage : body.at("stage_transcripts")) {
            record.stage_transcripts.push_back(strategies::StageTranscript{
                stage.at("prompt").get<std::string>(),
                stage.at("response").get<std::string>(),
            });
        }
        const std::string verdict = body.at("verdict").get<std::string>();
        if (verdict == "unparseable") {
            record.verdict = Verdict::unparseable(
                record.stage_transcripts.empty() ? ""
                                                 : record.stage_transcripts.back().response);
        } else {
            record.verdict = Verdict::decided(label_from_token(verdict));
        }
        for (const auto& flag : body.at("cached_stages")) {
            record.cached_stages.push_back(flag.get<bool>());
        }
        record.elapsed_ms = body.at("elapsed_ms").get<std::int64_t>();
        if (body.contains("error") && !body.at("error").is_null()) {
            record.error = body.at("error").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::Format, std::string("record line: missing field: ") + e.what());
    }
    return record;
}

strategies::ExecutionConfig execution_config(const RunManifest& manifest) {
    strategies::ExecutionConfig config;
    config.provider_id = manifest.provider_id;
    config.model = manifest.model;
    config.temperature = manifest.temperature;
    config.stage1_max_tokens = manifest.stage1_max_tokens;
    config.stage2_max_tokens = manifest.stage2_max_tokens;
    config.prompt_dataset =
        manifest.prompt_dataset.empty() ? manifest.dataset_id : manifest.prompt_dataset;
    config.embed_sample_tag = manifest.provider_id == "mock";
    return config;
}

namespace {

datasets::Dataset select_samples(const RunManifest& manifest, const datasets::Dataset& dataset) {
    if (!manifest.limit || *manifest.limit >= dataset.samples.size()) {
        return dataset;
    }
    return datasets::subsample(dataset, *manifest.limit, manifest.seed);
}

void validate_run_inputs(const RunManifest& manifest, const datasets::Dataset& dataset) {
    if (manifest.concurrency < 1) {
        throw Error(Errc::Config, "concurrency must be >= 1");
    }
    if (manifest.dataset_id != dataset.id) {
        throw Error(Errc::Config, "manifest dataset_id '" + manifest.dataset_id +
                                      "' does not match dataset '" + dataset.id + "'");
    }
    if (!manifest.dataset_digest.empty() && manifest.dataset_digest != dataset_digest(dataset)) {
        throw Error(Errc::Config, "dataset digest mismatch: manifest was created for different data");
    }
    if (dataset.samples.empty()) {
        throw Error(Errc::EmptyRun, "dataset '" + dataset.id + "' has no samples");
    }
    const auto report = datasets::validate(dataset);
    if (!report.duplicate_ids.empty()) {
        throw Error(Errc::Data, "dataset '" + dataset.id + "' has duplicate sample ids (first: '" +
                                    report.duplicate_ids.front() + "')");
    }
    // Fails fast on unregistered prompt datasets and bad decoding settings.
    strategies::ExecutionConfig config = execution_config(manifest);
    if (config.model.empty()) {
        throw Error(Errc::Config, "manifest has no model");
    }
    if (config.temperature < 0.0 || config.stage1_max_tokens <= 0 || config.stage2_max_tokens <= 0) {
        throw Error(Errc::Config, "invalid decoding settings in manifest");
    }
    if (!strategies::is_registered_prompt_dataset(config.prompt_dataset)) {
        throw Error(Errc::Config, "no registered prompt preamble for dataset '" +
                                      config.prompt_dataset +
                                      "' (set a prompt style of mustard, semeval2018t3 or generic)");
    }
}

// Serialized appender for the run's record log; one line per completed
// record, flushed immediately so interrupts lose at most the line in flight.
class RecordLog {
public:
    explicit RecordLog(const fs::path& path)
        : out_(path, std::ios::binary | std::ios::app) {
        if (!out_) {
            throw Error(Errc::Io, "cannot open record log '" + path.string() + "'");
        }
    }

    void append(const strategies::PredictionRecord& record) {
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << record_to_json_line(record) << '\n';
        out_.flush();
    }

private:
    std::mutex mutex_;
    std::ofstream out_;
};

void write_metrics_file(const fs::path& run_dir, const MetricsSummary& metrics,
                        std::size_t records_total) {
    json per_class;
    for (const auto& [label, f1] : metrics.per_class_f1) {
        per_class[std::string(label_token(label))] = f1;
    }
    const json body = {
        {"accuracy", metrics.accuracy},
        {"macro_f1", metrics.macro_f1},
        {"per_class_f1", std::move(per_class)},
        {"counts",
         {{"tp", metrics.counts.tp},
          {"fp", metrics.counts.fp},
          {"fn", metrics.counts.fn},
          {"tn", metrics.counts.tn},
          {"unparseable", metrics.counts.unparseable}}},
        {"n", metrics.n},
        {"records_total", records_total},
    };
    std::ofstream out(run_dir / kMetricsFile, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::Io, "cannot write metrics in '" + run_dir.string() + "'");
    }
    out << body.dump(2) << '\n';
}

// Runs the selected samples that are not already in `have`, appending each
// completed record to the log. Results land in `records` at the sample's
// dataset position.
void evaluate_missing(const RunManifest& manifest, const datasets::Dataset& selected,
                      llm::CompletionClient& client, RecordLog& log,
                      std::map<std::string, strategies::PredictionRecord>& have,
                      std::vector<strategies::PredictionRecord>& records,
                      std::atomic<bool>* stop_requested) {
    const strategies::ExecutionConfig config = execution_config(manifest);

    std::vector<std::size_t> pending;
    records.resize(selected.samples.size());
    for (std::size_t i = 0; i < selected.samples.size(); ++i) {
        const auto it = have.find(selected.samples[i].id);
        if (it != have.end()) {
            records[i] = it->second;
        } else {
            pending.push_back(i);
        }
    }
    if (pending.empty()) {
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex failure_mutex;
    std::exception_ptr failure;

    const int worker_count =
        static_cast<int>(std::min<std::size_t>(manifest.concurrency, pending.size()));

    auto worker = [&]() {
        for (;;) {
            if (abort.load() || (stop_requested && stop_requested->load())) {
                return;
            }
            const std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) {
                return;
            }
            const std::size_t index = pending[slot];
            try {
                strategies::PredictionRecord record = strategies::execute_strategy(
                    manifest.strategy, selected.samples[index], client, config);
                log.append(record);
                records[index] = std::move(record);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                abort.store(true);
                return;
            }
        }
    };

    if (worker_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (int i = 0; i < worker_count; ++i) {
            workers.emplace_back(worker);
        }
        for (auto& thread : workers) {
            thread.join();
        }
    }

    if (failure) {
        std::rethrow_exception(failure);
    }
    if (stop_requested && stop_requested->load()) {
        throw Error(Errc::Io, "run interrupted; completed records are checkpointed and the run "
                              "can be resumed");
    }
}

RunResult finalize(RunManifest manifest, const datasets::Dataset& selected,
                   std::vector<strategies::PredictionRecord> records, const fs::path& run_dir) {
    std::map<std::string, Label> golds;
    for (const auto& sample : selected.samples) {
        golds[sample.id] = sample.gold;
    }
    RunResult result;
    result.metrics = report::summarize(records, golds, manifest.unparseable_policy);
    write_metrics_file(run_dir, result.metrics, records.size());

    manifest.finished_at = utc_now();
    save_manifest(manifest, run_dir);

    result.manifest = std::move(manifest);
    result.records = std::move(records);
    return result;
}

} // namespace

RunResult run_evaluation(RunManifest manifest, const datasets::Dataset& dataset,
                         llm::CompletionClient& client, const RunOptions& options) {
    if (manifest.dataset_digest.empty()) {
        manifest.dataset_digest = dataset_digest(dataset);
    }
    if (manifest.prompt_dataset.empty()) {
        manifest.prompt_dataset = manifest.dataset_id;
    }
    if (manifest.harness_version.empty()) {
        manifest.harness_version = kHarnessVersion;
    }
    if (manifest.run_id.empty()) {
        manifest.run_id = derive_run_id(manifest);
    }
    validate_run_inputs(manifest, dataset);

    std::error_code ec;
    fs::create_directories(options.run_dir, ec);
    if (ec || !fs::is_directory(options.run_dir)) {
        throw Error(Errc::Io, "cannot create run directory '" + options.run_dir.string() + "'");
    }

    manifest.started_at = utc_now();
    manifest.finished_at.clear();
    save_manifest(manifest, options.run_dir);

    const datasets::Dataset selected = select_samples(manifest, dataset);

    // A fresh run owns the directory; stale logs from earlier runs would mix
    // with this one's records.
    fs::remove(options.run_dir / kRecordLogFile, ec);

    RecordLog log(options.run_dir / kRecordLogFile);
    std::map<std::string, strategies::PredictionRecord> have;
    std::vector<strategies::PredictionRecord> records;
    evaluate_missing(manifest, selected, client, log, have, records, options.stop_requested);

    return finalize(std::move(manifest), selected, std::move(records), options.run_dir);
}

RunResult resume(const fs::path& run_dir, const datasets::Dataset& dataset,
                 llm::CompletionClient& client, std::atomic<bool>* stop_requested) {
    RunManifest manifest = load_manifest(run_dir);
    if (manifest.dataset_digest != dataset_digest(dataset)) {
        throw Error(Errc::Config,
                    "dataset digest mismatch: this run directory was created from different data");
    }
    validate_run_inputs(manifest, dataset);

    const datasets::Dataset selected = select_samples(manifest, dataset);

    // Last valid line per sample wins; corrupt lines are skipped and their
    // samples re-evaluated.
    std::map<std::string, strategies::PredictionRecord> have;
    const fs::path log_path = run_dir / kRecordLogFile;
    if (fs::exists(log_path)) {
        std::ifstream in(log_path, std::ios::binary);
        std::string line;
        std::size_t line_number = 0;
        while (std::getline(in, line)) {
            ++line_number;
            if (line.empty()) {
                continue;
            }
            try {
                strategies::PredictionRecord record = record_from_json_line(line);
                have[record.sample_id] = std::move(record);
            } catch (const Error&) {
                std::cerr << "warning: skipping corrupt record at " << log_path.string() << ":"
                          << line_number << "\n";
            }
        }
    }

    RecordLog log(log_path);
    std::vector<strategies::PredictionRecord> records;
    evaluate_missing(manifest, selected, client, log, have, records, stop_requested);

    return finalize(std::move(manifest), selected, std::move(records), run_dir);
}

} // namespace pragmabench::runner
