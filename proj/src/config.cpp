// SPDX-License-Identifier: Apache-2.0
#include "solsentry/config.hpp"

#include <algorithm>
#include <sstream>

#include "solsentry/util.hpp"

namespace solsentry {

namespace fs = std::filesystem;

namespace {

struct KeySpec {
    const char* key;
    const char* fallback;
    const char* env;
    bool secret;
};

const std::vector<KeySpec>& key_specs()
{
    static const std::vector<KeySpec> specs{
        {"backend.endpoint", "", "SENTRY_LLM_ENDPOINT", false},
        {"backend.fixture_dir", "", nullptr, false},
        {"backend.key", "", "SENTRY_LLM_KEY", true},
        {"backend.kind", "fixture", nullptr, false},
        {"backend.model", "gpt-4o-mini-2024-07-18", nullptr, false},
        {"backend.retries", "3", nullptr, false},
        {"cache.dir", "", "SENTRY_CACHE_DIR", false},
        {"corpus.dir", "corpus", nullptr, false},
        {"detectors.disabled", "", nullptr, false},
        {"gen.max_attempts", "5", nullptr, false},
        {"gen.seed", "0", nullptr, false},
        {"gen.template", "P_rcbi", nullptr, false},
        {"gen.threshold", "0.80", nullptr, false},
        {"ingest.etherscan_key", "", "SENTRY_ETHERSCAN_KEY", true},
        {"ingest.fixture_dir", "", nullptr, false},
        {"ingest.github_token", "", "SENTRY_GITHUB_TOKEN", true},
        {"ingest.network", "mainnet", nullptr, false},
        {"ingest.offline", "false", "SENTRY_OFFLINE", false},
        {"output.format", "text", nullptr, false},
        {"rules.dir", ".solsentry/rules", "SENTRY_RULES_DIR", false},
        {"scan.jobs", "0", nullptr, false},
        {"scan.mint_check", "true", nullptr, false},
        {"scan.pragma_gate", "true", nullptr, false},
    };
    return specs;
}

const KeySpec* find_spec(const std::string& key)
{
    for (const auto& s : key_specs()) {
        if (key == s.key) return &s;
    }
    return nullptr;
}

std::string default_cache_dir(const CliConfig::EnvLookup& env)
{
    if (auto xdg = env("XDG_CACHE_HOME"); xdg && !xdg->empty()) return (fs::path(*xdg) / "solsentry").string();
    if (auto home = env("HOME"); home && !home->empty()) return (fs::path(*home) / ".cache" / "solsentry").string();
    return ".solsentry/cache";
}

} // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (!value.empty() && value.front() == '"') {
            const auto close = value.find('"', 1);
            if (close == std::string::npos) {
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated string");
            }
            value = value.substr(1, close - 1);
        } else if (auto hash = value.find(" #"); hash != std::string::npos) {
            value = trim(value.substr(0, hash));
        }
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(section.empty() ? key : section + "." + key, value);
    }
    return out;
}

std::optional<fs::path> user_config_file(const CliConfig::EnvLookup& env)
{
    if (auto xdg = env("XDG_CONFIG_HOME"); xdg && !xdg->empty()) return fs::path(*xdg) / "solsentry" / "config.toml";
    if (auto home = env("HOME"); home && !home->empty()) return fs::path(*home) / ".config" / "solsentry" / "config.toml";
    return std::nullopt;
}

bool CliConfig::is_known_key(const std::string& key)
{
    return find_spec(key) != nullptr;
}

bool CliConfig::is_secret_key(const std::string& key)
{
    const auto* s = find_spec(key);
    return s && s->secret;
}

CliConfig CliConfig::defaults(const EnvLookup& env)
{
    CliConfig c;
    for (const auto& s : key_specs()) {
        c.entries_[s.key] = {s.fallback, "default"};
    }
    c.entries_["cache.dir"].value = default_cache_dir(env);
    return c;
}

CliConfig CliConfig::load(const std::optional<fs::path>& explicit_file, const EnvLookup& env)
{
    CliConfig c = defaults(env);
    std::optional<fs::path> file;
    if (explicit_file) {
        if (!fs::exists(*explicit_file)) throw ConfigError("config file not found: " + explicit_file->string());
        file = explicit_file;
    } else if (fs::exists("solsentry.toml")) {
        file = fs::path("solsentry.toml");
    } else if (auto user = user_config_file(env); user && fs::exists(*user)) {
        file = user;
    }
    if (file) {
        c.apply_text(read_file(*file), file->string());
    }
    c.apply_env(env);
    return c;
}

void CliConfig::apply_text(const std::string& text, const std::string& source)
{
    for (auto& [key, value] : parse_config_text(text)) {
        if (!is_known_key(key)) throw ConfigError(source + ": unknown key '" + key + "'");
        entries_[key] = {std::move(value), source};
    }
}

void CliConfig::apply_env(const EnvLookup& env)
{
    for (const auto& s : key_specs()) {
        if (!s.env) continue;
        if (auto v = env(s.env); v && !v->empty()) {
            entries_[s.key] = {*v, std::string("env:") + s.env};
        }
    }
}

void CliConfig::set(const std::string& key, std::string value, std::string source)
{
    if (!is_known_key(key)) throw ConfigError("unknown config key '" + key + "'");
    entries_[key] = {std::move(value), std::move(source)};
}

const CliConfig::Entry& CliConfig::entry(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

const std::string& CliConfig::get(const std::string& key) const
{
    return entry(key).value;
}

bool CliConfig::get_bool(const std::string& key) const
{
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

int CliConfig::get_int(const std::string& key) const
{
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        int n = std::stoi(v, &used);
        if (used == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

double CliConfig::get_double(const std::string& key) const
{
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::vector<std::string> CliConfig::get_list(const std::string& key) const
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : get(key) + ",") {
        if (c == ',') {
            if (auto t = trim(cur); !t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

std::string CliConfig::show_text() const
{
    std::ostringstream out;
    for (const auto& [key, e] : entries_) {
        const std::string shown = is_secret_key(key) && !e.value.empty() ? "[REDACTED]" : e.value;
        out << key << " = \"" << shown << "\"  # " << e.source << "\n";
    }
    return out.str();
}

nlohmann::ordered_json CliConfig::show_json() const
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, e] : entries_) {
        const std::string shown = is_secret_key(key) && !e.value.empty() ? "[REDACTED]" : e.value;
        j[key] = {{"value", shown}, {"source", e.source}};
    }
    return j;
}

} // namespace solsentry
