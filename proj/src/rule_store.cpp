// SPDX-License-Identifier: Apache-2.0
#include "solsentry/rule_store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "solsentry/util.hpp"

namespace solsentry::rules {

namespace fs = std::filesystem;

MalformedRuleFile::MalformedRuleFile(std::string p, std::string r)
    : Error("malformed rule file " + p + ": " + r), path(std::move(p)), reason(std::move(r))
{
}

bool valid_rule_id(std::string_view id)
{
    if (id.empty() || id.front() == '.') {
        return false;
    }
    return std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    });
}

nlohmann::ordered_json rule_to_json(const GeneratedRule& rule)
{
    nlohmann::ordered_json j;
    j["rule_id"] = rule.rule_id;
    j["swe_id"] = rule.swe_id;
    j["condition"] = rule.condition_text;
    j["origin"] = rule.origin_label;
    j["acceptance_accuracy"] = rule.acceptance_accuracy;
    j["created_from"] = {{"template", rule.created_from.template_id},
                         {"instance_set", rule.created_from.instance_set}};
    return j;
}

GeneratedRule rule_from_json(const nlohmann::json& j, const std::string& where)
{
    auto text = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw MalformedRuleFile(where, std::string("'") + key + "' must be text");
        }
        return j[key].get<std::string>();
    };
    if (!j.is_object()) {
        throw MalformedRuleFile(where, "expected a JSON object");
    }
    if (!j.contains("acceptance_accuracy") || !j["acceptance_accuracy"].is_number()) {
        throw MalformedRuleFile(where, "'acceptance_accuracy' must be a number");
    }
    double acc = j["acceptance_accuracy"].get<double>();
    if (acc < 0 || acc > 1) {
        throw MalformedRuleFile(where, "'acceptance_accuracy' must lie in [0, 1]");
    }
    std::string origin = text("origin");
    if (origin != "generated" && origin != "builtin-extension") {
        throw MalformedRuleFile(where, "'origin' must be \"generated\" or \"builtin-extension\"");
    }
    CreatedFrom from;
    if (j.contains("created_from") && j["created_from"].is_object()) {
        from.template_id = j["created_from"].value("template", "");
        from.instance_set = j["created_from"].value("instance_set", "");
    }
    std::string id = text("rule_id");
    if (!valid_rule_id(id)) {
        throw MalformedRuleFile(where, "invalid rule_id '" + id + "'");
    }
    try {
        return make_rule(id, text("swe_id"), text("condition"), acc, std::move(from), origin);
    } catch (const RuleSyntaxError& e) {
        throw MalformedRuleFile(where, e.what());
    }
}

RuleStore::RuleStore(fs::path dir) : dir_(std::move(dir)) {}

fs::path RuleStore::path_of(const std::string& rule_id) const
{
    return dir_ / (rule_id + ".json");
}

std::vector<GeneratedRule> RuleStore::load() const
{
    std::lock_guard lock(mutex_);
    std::vector<GeneratedRule> out;
    if (!fs::is_directory(dir_)) {
        return out;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(f));
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedRuleFile(f.string(), e.what());
        }
        GeneratedRule r = rule_from_json(j, f.string());
        if (f.stem().string() != r.rule_id) {
            throw MalformedRuleFile(f.string(), "file name does not match rule_id '" + r.rule_id + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

bool RuleStore::contains(const std::string& rule_id) const
{
    return fs::exists(path_of(rule_id));
}

void RuleStore::add(const GeneratedRule& rule)
{
    if (!valid_rule_id(rule.rule_id)) {
        throw Error("invalid rule id '" + rule.rule_id + "'");
    }
    std::lock_guard lock(mutex_);
    fs::create_directories(dir_);
    const fs::path target = path_of(rule.rule_id);
    if (fs::exists(target)) {
        throw DuplicateDetectorId(rule.rule_id);
    }
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    write_file_atomic(tmp, rule_to_json(rule).dump(2) + "\n");
    // A hard link refuses to replace an existing file, which keeps two writers
    // from clobbering each other's rule.
    std::error_code ec;
    fs::create_hard_link(tmp, target, ec);
    fs::remove(tmp);
    if (ec) {
        if (fs::exists(target)) {
            throw DuplicateDetectorId(rule.rule_id);
        }
        throw Error("cannot write rule file " + target.string() + ": " + ec.message());
    }
}

std::set<std::string> RuleStore::disabled() const
{
    std::set<std::string> out;
    const fs::path p = dir_ / ".disabled";
    if (!fs::exists(p)) {
        return out;
    }
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) {
            out.insert(line);
        }
    }
    return out;
}

void RuleStore::set_disabled(const std::string& rule_id, bool disabled_flag)
{
    std::lock_guard lock(mutex_);
    auto ids = [&] {
        std::set<std::string> out;
        const fs::path p = dir_ / ".disabled";
        if (fs::exists(p)) {
            std::istringstream in(read_file(p));
            std::string line;
            while (std::getline(in, line)) {
                if (line = trim(line); !line.empty()) {
                    out.insert(line);
                }
            }
        }
        return out;
    }();
    if (disabled_flag) {
        ids.insert(rule_id);
    } else {
        ids.erase(rule_id);
    }
    std::string text;
    for (const auto& id : ids) {
        text += id + "\n";
    }
    write_file_atomic(dir_ / ".disabled", text);
}

void RuleStore::load_into(Registry& registry) const
{
    auto off = disabled();
    for (const auto& rule : load()) {
        DetectorDescriptor d = install_rule(rule);
        d.enabled = !off.contains(rule.rule_id);
        registry.add(std::move(d));
    }
}

} // namespace solsentry::rules
