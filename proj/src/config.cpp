#include "pragmabench/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pragmabench::cli {

const char* config_source_name(ConfigSource source) {
    switch (source) {
    case ConfigSource::Default: return "default";
    case ConfigSource::File: return "file";
    case ConfigSource::Env: return "env";
    case ConfigSource::Flag: return "flag";
    }
    return "default";
}

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "dataset",
        "strategy",
        "provider",
        "model",
        "temperature",
        "stage1-max-tokens",
        "stage2-max-tokens",
        "limit",
        "seed",
        "concurrency",
        "unparseable-policy",
        "prompt-style",
        "cache-dir",
        "out",
        "run-id",
        "mock",
        "mock-script",
        "rpm",
        "max-in-flight",
        "mustard-path",
        "semeval2018t3-path",
    };
    return keys;
}

std::string env_name_for(std::string_view key) {
    std::string name = "PRAGMABENCH_";
    for (const char c : key) {
        if (c == '-') {
            name.push_back('_');
        } else {
            name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    return name;
}

namespace {

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

bool is_known_key(const std::string& key) {
    const auto& keys = known_config_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

} // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text) {
    std::map<std::string, std::string> values;
    std::size_t line_number = 0;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        std::size_t end = text.find('\n', begin);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        const std::string line = trim(text.substr(begin, end - begin));
        const bool at_end = end == text.size();
        begin = end + 1;
        ++line_number;
        if (!line.empty() && line[0] != '#') {
            const std::size_t equals = line.find('=');
            if (equals == std::string::npos) {
                throw Error(Errc::Config, "config line " + std::to_string(line_number) +
                                              ": expected 'key = value'");
            }
            const std::string key = trim(std::string_view(line).substr(0, equals));
            const std::string value = trim(std::string_view(line).substr(equals + 1));
            if (!is_known_key(key)) {
                throw Error(Errc::Config, "config line " + std::to_string(line_number) +
                                              ": unknown key '" + key + "'");
            }
            values[key] = value;
        }
        if (at_end) {
            break;
        }
    }
    return values;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Config, "cannot open config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

ResolvedConfig ResolvedConfig::resolve(const std::map<std::string, std::string>& flags,
                                       const std::map<std::string, std::string>& file_values,
                                       const EnvLookup& env,
                                       const std::map<std::string, std::string>& defaults) {
    ResolvedConfig resolved;
    for (const auto& [key, value] : defaults) {
        if (!is_known_key(key)) {
            throw Error(Errc::Config, "unknown config key '" + key + "'");
        }
        resolved.values_[key] = ConfigValue{value, ConfigSource::Default};
    }
    for (const auto& [key, value] : file_values) {
        if (!is_known_key(key)) {
            throw Error(Errc::Config, "unknown config key '" + key + "'");
        }
        resolved.values_[key] = ConfigValue{value, ConfigSource::File};
    }
    if (env) {
        for (const auto& key : known_config_keys()) {
            if (auto value = env(env_name_for(key))) {
                resolved.values_[key] = ConfigValue{*value, ConfigSource::Env};
            }
        }
    }
    for (const auto& [key, value] : flags) {
        if (!is_known_key(key)) {
            throw Error(Errc::Config, "unknown config key '" + key + "'");
        }
        resolved.values_[key] = ConfigValue{value, ConfigSource::Flag};
    }
    return resolved;
}

std::optional<ConfigValue> ResolvedConfig::get(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string ResolvedConfig::value_or(std::string_view key, std::string_view fallback) const {
    const auto value = get(key);
    return value ? value->value : std::string(fallback);
}

std::optional<std::string> process_env(const std::string& env_name) {
    const char* value = std::getenv(env_name.c_str());
    if (!value) {
        return std::nullopt;
    }
    return std::string(value);
}

} // namespace pragmabench::cli
