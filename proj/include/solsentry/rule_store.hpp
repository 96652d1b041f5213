// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "solsentry/detectors.hpp"
#include "solsentry/rule_dsl.hpp"

namespace solsentry::rules {

class MalformedRuleFile : public Error {
public:
    MalformedRuleFile(std::string path, std::string reason);
    std::string path;
    std::string reason;
};

/// {rule_id, swe_id, condition, origin, acceptance_accuracy, created_from}
nlohmann::ordered_json rule_to_json(const GeneratedRule& rule);
GeneratedRule rule_from_json(const nlohmann::json& j, const std::string& where = "<rule>");

/// Directory of `<rule_id>.json` files plus a `.disabled` id list.
class RuleStore {
public:
    explicit RuleStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path path_of(const std::string& rule_id) const;

    /// All rules ordered by id. Throws MalformedRuleFile on the first bad file.
    std::vector<GeneratedRule> load() const;
    bool contains(const std::string& rule_id) const;
    /// Writes a new rule file; throws DuplicateDetectorId when the id exists.
    void add(const GeneratedRule& rule);

    std::set<std::string> disabled() const;
    void set_disabled(const std::string& rule_id, bool disabled);

    /// Registers every stored rule; disabled ones are registered switched off.
    void load_into(Registry& registry) const;

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// Rule ids become file names, so they are restricted to [A-Za-z0-9._-].
bool valid_rule_id(std::string_view id);

} // namespace solsentry::rules
