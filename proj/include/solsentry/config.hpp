// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "solsentry/errors.hpp"

namespace solsentry {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Settings merged from defaults, a config file, environment variables and
/// flags, in that order of increasing precedence. Every value remembers where
/// it came from.
class CliConfig {
public:
    struct Entry {
        std::string value;
        std::string source; // "default", a file path, "env:NAME" or "flag"
    };

    using EnvLookup = std::function<std::optional<std::string>(const char*)>;

    /// Built-in defaults only.
    static CliConfig defaults(const EnvLookup& env);

    /// Defaults, then `explicit_file` or the first of ./solsentry.toml and the
    /// user config file, then the environment.
    static CliConfig load(const std::optional<std::filesystem::path>& explicit_file, const EnvLookup& env);

    void apply_text(const std::string& text, const std::string& source);
    void apply_env(const EnvLookup& env);
    void set(const std::string& key, std::string value, std::string source = "flag");

    const std::string& get(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;
    const Entry& entry(const std::string& key) const;
    const std::map<std::string, Entry>& entries() const { return entries_; }

    /// `key = value  # source` lines; secrets shown as "[REDACTED]".
    std::string show_text() const;
    nlohmann::ordered_json show_json() const;

    static bool is_known_key(const std::string& key);
    static bool is_secret_key(const std::string& key);

private:
    std::map<std::string, Entry> entries_;
};

/// Parses `key = value` lines with optional `[section]` headers, `#`
/// comments and double-quoted values. Throws ConfigError with a line number.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

/// $XDG_CONFIG_HOME/solsentry/config.toml, or ~/.config/solsentry/config.toml.
std::optional<std::filesystem::path> user_config_file(const CliConfig::EnvLookup& env);

} // namespace solsentry
