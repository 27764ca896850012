#include <deque>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pragmabench/cli.hpp"
#include "pragmabench/version.hpp"

namespace {

// Config-key options are collected individually so only flags the user
// actually set override the environment / config-file layers. A deque keeps
// the value slots stable while options are added.
struct KeyedOption {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
};

void add_keyed(CLI::App& cmd, std::deque<KeyedOption>& storage, const std::string& key,
               const std::string& description) {
    storage.push_back(KeyedOption{key, "", nullptr});
    KeyedOption& slot = storage.back();
    slot.option = cmd.add_option("--" + key, slot.value, description);
}

std::map<std::string, std::string> collect_flags(const std::deque<KeyedOption>& storage) {
    std::map<std::string, std::string> flags;
    for (const auto& slot : storage) {
        if (slot.option->count() > 0) {
            flags[slot.key] = slot.value;
        }
    }
    return flags;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pragmabench: prompting-strategy evaluation harness for sarcasm detection"};
    app.set_version_flag("--version", pragmabench::kHarnessVersion);
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Evaluate one strategy over a dataset");
    std::deque<KeyedOption> run_flags;
    add_keyed(*run, run_flags, "dataset", "Dataset id (mustard, semeval2018t3, ...) or file path");
    add_keyed(*run, run_flags, "strategy", "Prompting strategy: io|cot|tot|boc|coc|goc|mp|pmp");
    add_keyed(*run, run_flags, "provider", "Provider id: mock, openai, anthropic or custom");
    add_keyed(*run, run_flags, "model", "Model name sent to the provider");
    add_keyed(*run, run_flags, "temperature", "Sampling temperature (default 0.0)");
    add_keyed(*run, run_flags, "stage1-max-tokens", "Token budget for the first call");
    add_keyed(*run, run_flags, "stage2-max-tokens", "Token budget for the reflection call");
    add_keyed(*run, run_flags, "limit", "Evaluate a deterministic subsample of N samples");
    add_keyed(*run, run_flags, "seed", "Subsample seed (default 0)");
    add_keyed(*run, run_flags, "concurrency", "Worker count (default 1)");
    add_keyed(*run, run_flags, "unparseable-policy", "count_as_wrong (default) or exclude");
    add_keyed(*run, run_flags, "prompt-style", "Prompt preamble override for custom datasets");
    add_keyed(*run, run_flags, "cache-dir", "Enable the response cache under this directory");
    add_keyed(*run, run_flags, "out", "Run directory (default runs/<run_id>)");
    add_keyed(*run, run_flags, "run-id", "Override the derived run id");
    add_keyed(*run, run_flags, "mock", "Mock mode: echo-gold|fixed-sarcastic|fixed-not-sarcastic|by-digest");
    add_keyed(*run, run_flags, "mock-script", "Digest->response JSON file for --mock by-digest");
    add_keyed(*run, run_flags, "rpm", "Requests-per-minute cap for remote providers");
    add_keyed(*run, run_flags, "max-in-flight", "In-flight request cap for remote providers");
    add_keyed(*run, run_flags, "mustard-path", "File path backing the 'mustard' dataset id");
    add_keyed(*run, run_flags, "semeval2018t3-path", "File path backing the 'semeval2018t3' dataset id");

    std::string run_config_path;
    bool run_resume = false;
    std::string run_from_manifest;
    run->add_option("--config", run_config_path, "Key-value config file");
    run->add_flag("--resume", run_resume, "Continue the run directory given by --out");
    run->add_option("--from-manifest", run_from_manifest, "Reproduce a run from its manifest file");

    // report
    auto* report = app.add_subcommand("report", "Merge runs into a comparison table");
    pragmabench::cli::ReportArgs report_args;
    report->add_option("inputs", report_args.inputs, "Run directories and/or row files");
    report->add_option("--layout", report_args.layout, "paper-table1 (default) or flat");
    report->add_option("--format", report_args.format, "table (default), csv or jsonl");
    report->add_option("--out", report_args.out, "Write output to a file instead of stdout");

    // validate
    auto* validate = app.add_subcommand("validate", "Check a dataset file");
    pragmabench::cli::ValidateArgs validate_args;
    validate->add_option("--dataset", validate_args.dataset_path, "Dataset file to validate");

    // cache
    auto* cache = app.add_subcommand("cache", "Inspect or clear the response cache");
    pragmabench::cli::CacheArgs cache_args;
    cache->add_option("action", cache_args.action, "stats or clear")->required();
    cache->add_option("--cache-dir", cache_args.cache_dir, "Cache directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return pragmabench::cli::kExitConfigError;
    }

    if (run->parsed()) {
        pragmabench::cli::RunArgs args;
        args.flag_values = collect_flags(run_flags);
        args.config_path = run_config_path;
        args.resume = run_resume;
        args.from_manifest = run_from_manifest;
        return pragmabench::cli::cmd_run(args);
    }
    if (report->parsed()) {
        return pragmabench::cli::cmd_report(report_args);
    }
    if (validate->parsed()) {
        return pragmabench::cli::cmd_validate(validate_args);
    }
    return pragmabench::cli::cmd_cache(cache_args);
}
