#pragma once

#include <map>
#include <string>
#include <vector>

namespace pragmabench::cli {

// Exit codes: 0 success, 1 failed validation, 2 config error, 3 dataset/input
// error, 4 provider abort, 130 interrupted.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitProviderAbort = 4;
inline constexpr int kExitInterrupted = 130;

struct RunArgs {
    // Config-key flags that were explicitly set on the command line.
    std::map<std::string, std::string> flag_values;
    std::string config_path;   // --config
    bool resume = false;       // --resume (continue the run directory in --out)
    std::string from_manifest; // --from-manifest (reproduce a frozen run)
};

struct ReportArgs {
    std::vector<std::string> inputs; // run directories and/or structured row files
    std::string layout = "paper-table1";
    std::string format = "table";
    std::string out; // empty -> stdout
};

struct ValidateArgs {
    std::string dataset_path;
};

struct CacheArgs {
    std::string action; // "stats" | "clear"
    std::string cache_dir;
};

int cmd_run(const RunArgs& args);
int cmd_report(const ReportArgs& args);
int cmd_validate(const ValidateArgs& args);
int cmd_cache(const CacheArgs& args);

} // namespace pragmabench::cli
