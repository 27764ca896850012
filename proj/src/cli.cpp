#include "pragmabench/cli.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "pragmabench/config.hpp"
#include "pragmabench/datasets.hpp"
#include "pragmabench/llm_cache.hpp"
#include "pragmabench/mock_client.hpp"
#include "pragmabench/providers.hpp"
#include "pragmabench/report.hpp"
#include "pragmabench/runner.hpp"
#include "pragmabench/version.hpp"

namespace pragmabench::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_interrupt(int) {
    g_interrupted.store(true);
}

int code_for(const Error& error) {
    switch (error.code()) {
    case Errc::Config:
    case Errc::Argument:
    case Errc::Script:
    case Errc::EmptyReport:
        return kExitConfigError;
    default:
        return kExitDataError;
    }
}

int report_failure(const Error& error) {
    std::cerr << "error[" << errc_token(error.code()) << "] " << error.what() << "\n";
    return code_for(error);
}

int report_failure(const ProviderError& error) {
    std::cerr << "error[E_PROVIDER_" << to_string(error.klass()) << "] " << error.what() << "\n";
    return kExitProviderAbort;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    try {
        std::size_t consumed = 0;
        const unsigned long long parsed = std::stoull(value, &consumed);
        if (consumed != value.size()) {
            throw std::invalid_argument(value);
        }
        return parsed;
    } catch (const std::exception&) {
        throw Error(Errc::Config, "'" + key + "' must be a non-negative integer, got '" + value + "'");
    }
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        std::size_t consumed = 0;
        const double parsed = std::stod(value, &consumed);
        if (consumed != value.size()) {
            throw std::invalid_argument(value);
        }
        return parsed;
    } catch (const std::exception&) {
        throw Error(Errc::Config, "'" + key + "' must be a number, got '" + value + "'");
    }
}

ResolvedConfig resolve_layers(const RunArgs& args) {
    static const std::map<std::string, std::string> defaults = {
        {"temperature", "0.0"},
        {"stage1-max-tokens", "1024"},
        {"stage2-max-tokens", "512"},
        {"seed", "0"},
        {"concurrency", "1"},
        {"unparseable-policy", "count_as_wrong"},
    };
    std::map<std::string, std::string> file_values;
    if (!args.config_path.empty()) {
        file_values = parse_config_file(args.config_path);
    }
    return ResolvedConfig::resolve(args.flag_values, file_values, process_env, defaults);
}

std::string require(const ResolvedConfig& config, const std::string& key) {
    const auto value = config.get(key);
    if (!value || value->value.empty()) {
        throw Error(Errc::Config, "missing required option '--" + key + "'");
    }
    return value->value;
}

bool is_synthetic_source(const std::string& source) {
    return source.rfind("synthetic:", 0) == 0;
}

datasets::Dataset resolve_dataset(const ResolvedConfig& config, bool mock_mode,
                                  std::optional<std::size_t> limit) {
    const std::string spec = require(config, "dataset");
    if (fs::exists(spec) && fs::is_regular_file(spec)) {
        return datasets::load_auto(spec);
    }
    const std::string path_key = spec + "-path";
    if (const auto configured = config.get(path_key); configured && !configured->value.empty()) {
        return datasets::load_auto(configured->value);
    }
    if (mock_mode) {
        return datasets::make_synthetic(spec, limit.value_or(50));
    }
    throw Error(Errc::Config, "dataset '" + spec + "' is not a file and no --" + path_key +
                                  " is configured (mock providers fall back to a synthetic set)");
}

datasets::Dataset dataset_from_manifest(const runner::RunManifest& manifest) {
    if (is_synthetic_source(manifest.dataset_source)) {
        return datasets::make_synthetic(manifest.dataset_id, manifest.limit.value_or(50));
    }
    if (manifest.dataset_source.empty()) {
        throw Error(Errc::Config, "manifest has no dataset_source; pass the dataset explicitly");
    }
    return datasets::load_auto(manifest.dataset_source);
}

std::unique_ptr<llm::CompletionClient> make_base_client(const std::string& provider_id,
                                                        const std::string& mock_mode,
                                                        const std::string& mock_script_path,
                                                        const datasets::Dataset& dataset,
                                                        const ResolvedConfig& config) {
    if (provider_id == "mock") {
        if (mock_mode == "echo-gold" || mock_mode.empty()) {
            std::map<std::string, Label> golds;
            for (const auto& sample : dataset.samples) {
                golds[sample.id] = sample.gold;
            }
            return std::make_unique<llm::MockClient>(llm::MockScript::echo_gold(std::move(golds)));
        }
        if (mock_mode == "fixed-sarcastic") {
            return std::make_unique<llm::MockClient>(llm::MockScript::fixed(Label::Sarcastic));
        }
        if (mock_mode == "fixed-not-sarcastic") {
            return std::make_unique<llm::MockClient>(llm::MockScript::fixed(Label::NotSarcastic));
        }
        if (mock_mode == "by-digest") {
            if (mock_script_path.empty()) {
                throw Error(Errc::Config, "--mock by-digest needs --mock-script <file>");
            }
            return std::make_unique<llm::MockClient>(
                llm::MockScript::by_digest_file(mock_script_path));
        }
        throw Error(Errc::Config, "unknown mock mode '" + mock_mode +
                                      "' (expected echo-gold, fixed-sarcastic, "
                                      "fixed-not-sarcastic or by-digest)");
    }

    llm::ProviderConfig provider = llm::provider_from_env(provider_id);
    std::shared_ptr<llm::RateLimiter> limiter;
    const int max_in_flight =
        static_cast<int>(parse_u64(config.value_or("max-in-flight", "0"), "max-in-flight"));
    const double rpm = parse_double(config.value_or("rpm", "0"), "rpm");
    if (max_in_flight > 0 || rpm > 0) {
        limiter = std::make_shared<llm::RateLimiter>(max_in_flight, rpm);
    }
    return std::make_unique<llm::HttpCompletionClient>(std::move(provider), std::move(limiter));
}

struct ClientStack {
    std::unique_ptr<llm::CompletionClient> base;
    std::unique_ptr<llm::CompletionClient> caching; // wraps base when cache-dir set

    llm::CompletionClient& top() { return caching ? *caching : *base; }
};

ClientStack make_client(const runner::RunManifest& manifest, const datasets::Dataset& dataset,
                        const ResolvedConfig& config) {
    ClientStack stack;
    stack.base = make_base_client(manifest.provider_id, manifest.mock_mode,
                                  config.value_or("mock-script", ""), dataset, config);
    const std::string cache_dir = config.value_or("cache-dir", "");
    if (!cache_dir.empty()) {
        stack.caching = std::make_unique<llm::CachingClient>(*stack.base, cache_dir);
    }
    return stack;
}

void print_metrics_line(const MetricsSummary& metrics) {
    std::cout << "acc=" << report::fraction_6dp(metrics.accuracy)
              << " macro_f1=" << report::fraction_6dp(metrics.macro_f1) << " n=" << metrics.n
              << " unparseable=" << metrics.counts.unparseable << "\n";
}

runner::RunManifest build_manifest(const ResolvedConfig& config,
                                   const datasets::Dataset& dataset) {
    runner::RunManifest manifest;
    manifest.dataset_id = dataset.id;
    manifest.dataset_source = dataset.source_path;
    manifest.dataset_digest = runner::dataset_digest(dataset);
    manifest.strategy = strategies::strategy_from_token(require(config, "strategy"));
    manifest.provider_id = require(config, "provider");
    if (manifest.provider_id == "mock") {
        manifest.mock_mode = config.value_or("mock", "echo-gold");
        manifest.model = config.value_or("model", "mock-model");
    } else {
        if (config.has("mock")) {
            throw Error(Errc::Config, "--mock requires --provider mock");
        }
        manifest.model = require(config, "model");
    }
    manifest.temperature = parse_double(require(config, "temperature"), "temperature");
    manifest.stage1_max_tokens =
        static_cast<int>(parse_u64(require(config, "stage1-max-tokens"), "stage1-max-tokens"));
    manifest.stage2_max_tokens =
        static_cast<int>(parse_u64(require(config, "stage2-max-tokens"), "stage2-max-tokens"));
    manifest.seed = parse_u64(require(config, "seed"), "seed");
    if (const auto limit = config.get("limit"); limit && !limit->value.empty()) {
        manifest.limit = static_cast<std::size_t>(parse_u64(limit->value, "limit"));
        if (*manifest.limit == 0) {
            throw Error(Errc::Config, "--limit must be positive");
        }
    }
    manifest.concurrency =
        static_cast<int>(parse_u64(require(config, "concurrency"), "concurrency"));
    manifest.unparseable_policy =
        unparseable_policy_from_token(require(config, "unparseable-policy"));
    manifest.prompt_dataset = config.value_or("prompt-style", dataset.id);
    if (!strategies::is_registered_prompt_dataset(manifest.prompt_dataset)) {
        throw Error(Errc::Config, "no registered prompt preamble for dataset '" +
                                      manifest.prompt_dataset +
                                      "'; pass --prompt-style mustard|semeval2018t3|generic");
    }
    manifest.harness_version = kHarnessVersion;
    manifest.run_id = config.value_or("run-id", "");
    if (manifest.run_id.empty()) {
        manifest.run_id = runner::derive_run_id(manifest);
    }
    return manifest;
}

} // namespace

int cmd_run(const RunArgs& args) {
    try {
        const ResolvedConfig config = resolve_layers(args);

        runner::RunManifest manifest;
        datasets::Dataset dataset;
        fs::path run_dir;

        if (args.resume || !args.from_manifest.empty()) {
            if (args.resume) {
                run_dir = require(config, "out");
                manifest = runner::load_manifest(run_dir);
            } else {
                std::ifstream in(args.from_manifest, std::ios::binary);
                if (!in) {
                    throw Error(Errc::Io, "cannot open manifest '" + args.from_manifest + "'");
                }
                std::ostringstream buffer;
                buffer << in.rdbuf();
                manifest = runner::manifest_from_json(buffer.str());
                run_dir = config.value_or("out", "runs/" + manifest.run_id);
            }
            dataset = dataset_from_manifest(manifest);
        } else {
            std::optional<std::size_t> limit_hint;
            if (const auto limit = config.get("limit"); limit && !limit->value.empty()) {
                limit_hint = static_cast<std::size_t>(parse_u64(limit->value, "limit"));
            }
            const std::string provider = require(config, "provider");
            dataset = resolve_dataset(config, provider == "mock", limit_hint);
            manifest = build_manifest(config, dataset);
            run_dir = config.value_or("out", "runs/" + manifest.run_id);
        }

        ClientStack client = make_client(manifest, dataset, config);

        g_interrupted.store(false);
        auto* previous = std::signal(SIGINT, handle_interrupt);

        runner::RunResult result;
        try {
            if (args.resume) {
                result = runner::resume(run_dir, dataset, client.top(), &g_interrupted);
            } else {
                runner::RunOptions options;
                options.run_dir = run_dir;
                options.stop_requested = &g_interrupted;
                result = runner::run_evaluation(manifest, dataset, client.top(), options);
            }
        } catch (...) {
            std::signal(SIGINT, previous);
            if (g_interrupted.load()) {
                std::cerr << "interrupted; checkpointed records kept in " << run_dir.string()
                          << " (resume with --resume --out " << run_dir.string() << ")\n";
                return kExitInterrupted;
            }
            throw;
        }
        std::signal(SIGINT, previous);

        std::cerr << "run " << result.manifest.run_id << " finished; records in "
                  << run_dir.string() << "\n";
        print_metrics_line(result.metrics);
        return kExitOk;
    } catch (const ProviderError& e) {
        return report_failure(e);
    } catch (const Error& e) {
        return report_failure(e);
    }
}

int cmd_report(const ReportArgs& args) {
    try {
        if (args.inputs.empty()) {
            throw Error(Errc::Config, "no inputs: pass run directories or structured row files");
        }
        std::vector<report::ReportRow> rows;
        for (const auto& input : args.inputs) {
            if (fs::is_directory(input)) {
                rows.push_back(report::row_from_run_dir(input));
            } else if (fs::is_regular_file(input)) {
                auto loaded = report::load_structured(input);
                rows.insert(rows.end(), loaded.begin(), loaded.end());
            } else {
                throw Error(Errc::Io, "input '" + input + "' is neither a run directory nor a file");
            }
        }

        std::string output;
        if (args.format == "table") {
            report::TableLayout layout;
            if (args.layout == "paper-table1") {
                layout = report::TableLayout::PaperTable1;
            } else if (args.layout == "flat") {
                layout = report::TableLayout::Flat;
            } else {
                throw Error(Errc::Config, "unknown layout '" + args.layout +
                                              "' (expected paper-table1 or flat)");
            }
            output = report::emit_table(std::move(rows), layout);
        } else if (args.format == "csv") {
            output = report::emit_machine(std::move(rows), report::MachineFormat::Csv);
        } else if (args.format == "jsonl") {
            output = report::emit_machine(std::move(rows), report::MachineFormat::Structured);
        } else {
            throw Error(Errc::Config,
                        "unknown format '" + args.format + "' (expected table, csv or jsonl)");
        }

        if (args.out.empty()) {
            std::cout << output;
        } else {
            std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw Error(Errc::Io, "cannot write '" + args.out + "'");
            }
            out << output;
        }
        return kExitOk;
    } catch (const Error& e) {
        return report_failure(e);
    }
}

int cmd_validate(const ValidateArgs& args) {
    try {
        if (args.dataset_path.empty()) {
            throw Error(Errc::Config, "missing required option '--dataset'");
        }
        const datasets::Dataset dataset = datasets::load_auto(args.dataset_path);
        const datasets::ValidationReport report = datasets::validate(dataset);

        std::cout << "dataset: " << dataset.id << "\n";
        std::cout << "samples: " << dataset.samples.size() << "\n";
        std::cout << "balance: sarcastic=" << report.balance.at(Label::Sarcastic)
                  << " not_sarcastic=" << report.balance.at(Label::NotSarcastic) << "\n";
        std::cout << "duplicate ids:";
        if (report.duplicate_ids.empty()) {
            std::cout << " (none)";
        } else {
            for (const auto& id : report.duplicate_ids) {
                std::cout << " " << id;
            }
        }
        std::cout << "\n";
        std::cout << "empty utterances:";
        if (report.empty_utterance_ids.empty()) {
            std::cout << " (none)";
        } else {
            for (const auto& id : report.empty_utterance_ids) {
                std::cout << " " << id;
            }
        }
        std::cout << "\n";
        std::cout << "ok: " << (report.ok ? "true" : "false") << "\n";
        return report.ok ? kExitOk : kExitValidationFailed;
    } catch (const Error& e) {
        return report_failure(e);
    }
}

int cmd_cache(const CacheArgs& args) {
    try {
        if (args.cache_dir.empty()) {
            throw Error(Errc::Config, "missing required option '--cache-dir'");
        }
        const llm::ResponseCache cache(args.cache_dir);
        if (args.action == "stats") {
            const llm::CacheStats stats = cache.stats();
            std::cout << stats.entries << " entries, " << stats.bytes << " bytes\n";
            return kExitOk;
        }
        if (args.action == "clear") {
            const std::size_t removed = cache.clear();
            std::cout << removed << " entries removed\n";
            return kExitOk;
        }
        throw Error(Errc::Config, "unknown cache action '" + args.action +
                                      "' (expected stats or clear)");
    } catch (const Error& e) {
        return report_failure(e);
    }
}

} // namespace pragmabench::cli
