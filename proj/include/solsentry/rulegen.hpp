// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "solsentry/backend.hpp"
#include "solsentry/corpus.hpp"
#include "solsentry/detectors.hpp"
#include "solsentry/prompts.hpp"
#include "solsentry/rule_store.hpp"

namespace solsentry::rulegen {

/// Fine-tuning settings. Recorded with generated rules, never executed.
struct Hyperparameters {
    int epochs = 3;
    int batch_size = 1;
    double learning_rate_multiplier = 2;
};

struct GenerationConfig {
    TemplateId template_id = TemplateId::Prcbi;
    std::string model;
    int max_attempts = 5;
    double acceptance_threshold = 0.80;
    std::uint64_t seed = 0;
    Hyperparameters hyperparameters;

    /// Throws Error unless max_attempts >= 1 and 0 < threshold <= 1.
    void validate() const;
};

nlohmann::ordered_json config_json(const GenerationConfig& config);

class RejectedCandidate : public Error {
public:
    using Error::Error;
};

enum class Decision { Accepted, Rejected };
std::string_view decision_name(Decision d);

struct Verdict {
    std::string instance_id;
    corpus::Label expected = corpus::Label::Vulnerable;
    bool fired = false;
    bool correct = false;
};

struct ValidationReport {
    std::string candidate_id;
    std::string condition_text;
    std::vector<Verdict> verdicts;
    std::size_t correct = 0;
    double accuracy = 0;
    double threshold = 0.80;
    Decision decision = Decision::Rejected;
    /// Set when the condition did not parse.
    std::optional<std::string> error;
};

nlohmann::ordered_json report_json(const ValidationReport& r);
std::string format_report_text(const ValidationReport& r);

/// Accepted iff accuracy >= threshold.
Decision gate(double accuracy, double threshold);

/// Reduces a model response to the bare condition: Markdown fences, prose
/// lines, `if (...)` and `return ...;` wrappers, redundant outer parentheses
/// and a trailing semicolon are removed; `===`/`!==` become `==`/`!=`.
/// Throws EmptyResponse when nothing is left.
std::string extract_condition(std::string_view response);

/// The prompt sent for a set of instances: the vulnerable snippets joined by
/// blank lines under the configured template.
std::vector<Message> generation_prompt(const GenerationConfig& config, const std::vector<corpus::LabeledInstance>& instances);

/// One backend call; returns the extracted condition.
std::string generate_candidate(const GenerationConfig& config, LlmBackend& backend,
                               const std::vector<corpus::LabeledInstance>& instances);

/// Scans every instance with the candidate alone. An instance counts as fired
/// when a finding overlaps its marked span, or anywhere in the file when it
/// has none.
ValidationReport validate_candidate(const std::string& condition_text,
                                    const std::vector<corpus::LabeledInstance>& labeled, double threshold,
                                    const std::string& candidate_id = "candidate");

/// Deterministic id: "gen-<swe>-<first 10 hex of sha256(condition)>".
std::string default_rule_id(const std::string& swe_id, const std::string& condition_text);

/// Persists and registers an accepted candidate.
DetectorDescriptor integrate(const ValidationReport& report, const std::string& rule_id, const std::string& swe_id,
                             rules::CreatedFrom created_from, Registry& registry, rules::RuleStore& store);

struct LoopResult {
    bool integrated = false;
    std::optional<DetectorDescriptor> descriptor;
    std::optional<rules::GeneratedRule> rule;
    std::vector<ValidationReport> reports;
    std::size_t attempts = 0;
};

/// generate -> validate, up to max_attempts; the first accepted candidate is
/// integrated. BackendUnavailable propagates.
LoopResult run_loop(const GenerationConfig& config, LlmBackend& backend, const std::string& swe_id,
                    const std::vector<corpus::LabeledInstance>& instances, Registry& registry,
                    rules::RuleStore& store, const std::string& instance_set = "");

} // namespace solsentry::rulegen
