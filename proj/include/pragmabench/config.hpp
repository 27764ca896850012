#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pragmabench/errors.hpp"

namespace pragmabench::cli {

enum class ConfigSource {
    Default,
    File,
    Env,
    Flag,
};

const char* config_source_name(ConfigSource source);

struct ConfigValue {
    std::string value;
    ConfigSource source = ConfigSource::Default;
};

// Keys understood by the resolver; anything else in a config file is
// rejected.
const std::vector<std::string>& known_config_keys();

// Environment variable for a key: PRAGMABENCH_ + upper-snake key
// ("cache-dir" -> PRAGMABENCH_CACHE_DIR).
std::string env_name_for(std::string_view key);

// Parses the simple key-value config format: one "key = value" per line,
// blank lines and '#' comments ignored. Unknown keys throw Error(Config).
std::map<std::string, std::string> parse_config_text(std::string_view text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

using EnvLookup = std::function<std::optional<std::string>(const std::string& env_name)>;

// Layered resolution with precedence flags > environment > file > defaults.
// Every resolved value remembers which layer supplied it.
class ResolvedConfig {
public:
    static ResolvedConfig resolve(const std::map<std::string, std::string>& flags,
                                  const std::map<std::string, std::string>& file_values,
                                  const EnvLookup& env,
                                  const std::map<std::string, std::string>& defaults);

    std::optional<ConfigValue> get(std::string_view key) const;
    std::string value_or(std::string_view key, std::string_view fallback) const;
    bool has(std::string_view key) const { return get(key).has_value(); }

private:
    std::map<std::string, ConfigValue, std::less<>> values_;
};

// Process-environment lookup (getenv).
std::optional<std::string> process_env(const std::string& env_name);

} // namespace pragmabench::cli
