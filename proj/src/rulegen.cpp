// SPDX-License-Identifier: Apache-2.0
#include "solsentry/rulegen.hpp"

#include <cctype>
#include <iomanip>
#include <sstream>

#include "solsentry/parser.hpp"
#include "solsentry/rule_dsl.hpp"
#include "solsentry/util.hpp"

namespace solsentry::rulegen {

void GenerationConfig::validate() const
{
    if (max_attempts < 1) {
        throw Error("max_attempts must be at least 1");
    }
    if (!(acceptance_threshold > 0 && acceptance_threshold <= 1)) {
        throw Error("acceptance threshold must lie in (0, 1]");
    }
}

nlohmann::ordered_json config_json(const GenerationConfig& c)
{
    nlohmann::ordered_json j;
    j["template"] = prompt_template(c.template_id).name;
    j["model"] = c.model;
    j["max_attempts"] = c.max_attempts;
    j["acceptance_threshold"] = c.acceptance_threshold;
    j["seed"] = c.seed;
    j["hyperparameters"] = {{"epochs", c.hyperparameters.epochs},
                            {"batch_size", c.hyperparameters.batch_size},
                            {"learning_rate_multiplier", c.hyperparameters.learning_rate_multiplier}};
    return j;
}

std::string_view decision_name(Decision d)
{
    return d == Decision::Accepted ? "accepted" : "rejected";
}

Decision gate(double accuracy, double threshold)
{
    return accuracy >= threshold ? Decision::Accepted : Decision::Rejected;
}

nlohmann::ordered_json report_json(const ValidationReport& r)
{
    nlohmann::ordered_json j;
    j["candidate_id"] = r.candidate_id;
    j["condition"] = r.condition_text;
    j["accuracy"] = r.accuracy;
    j["correct"] = r.correct;
    j["total"] = r.verdicts.size();
    j["threshold"] = r.threshold;
    j["decision"] = decision_name(r.decision);
    if (r.error) j["error"] = *r.error;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& v : r.verdicts) {
        arr.push_back({{"instance_id", v.instance_id},
                       {"expected", corpus::label_name(v.expected)},
                       {"fired", v.fired},
                       {"correct", v.correct}});
    }
    j["verdicts"] = std::move(arr);
    return j;
}

std::string format_report_text(const ValidationReport& r)
{
    std::ostringstream out;
    out << r.candidate_id << ": " << decision_name(r.decision) << " (" << r.correct << "/" << r.verdicts.size()
        << " correct, accuracy " << std::fixed << std::setprecision(3) << r.accuracy << ", threshold "
        << std::setprecision(2) << r.threshold << ")\n";
    out << "  condition: " << r.condition_text << "\n";
    if (r.error) {
        out << "  error: " << *r.error << "\n";
        return out.str();
    }
    for (const auto& v : r.verdicts) {
        if (!v.correct) {
            out << "  miss " << v.instance_id << " (expected " << corpus::label_name(v.expected) << ", "
                << (v.fired ? "fired" : "silent") << ")\n";
        }
    }
    return out.str();
}

namespace {

/// Index of the parenthesis closing the one at `open`, skipping string literals.
std::size_t matching_paren(std::string_view s, std::size_t open)
{
    int depth = 0;
    char quote = 0;
    for (std::size_t i = open; i < s.size(); ++i) {
        char c = s[i];
        if (quote) {
            if (c == '\\') ++i;
            else if (c == quote) quote = 0;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        else if (c == '(') ++depth;
        else if (c == ')' && --depth == 0) return i;
    }
    return std::string_view::npos;
}

bool looks_like_prose(const std::string& line)
{
    if (line.back() == ':') return true;
    if (line.rfind("//", 0) == 0 || line.rfind("#", 0) == 0) return true;
    const bool has_operator = line.find_first_of("=<>!&|(\"") != std::string::npos;
    return !has_operator && line.find(' ') != std::string::npos;
}

std::string normalize_strict_equality(const std::string& s)
{
    std::string out;
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quote) {
            out += c;
            if (c == '\\' && i + 1 < s.size()) out += s[++i];
            else if (c == quote) quote = 0;
            continue;
        }
        if (c == '"' || c == '\'') quote = c;
        if ((c == '=' || c == '!') && s.compare(i + 1, 2, "==") == 0) {
            out += c;
            out += '=';
            i += 2;
            continue;
        }
        out += c;
    }
    return out;
}

bool starts_with_word(const std::string& s, std::string_view word)
{
    return s.rfind(word, 0) == 0 &&
           (s.size() == word.size() || std::isspace(static_cast<unsigned char>(s[word.size()])) || s[word.size()] == '(');
}

} // namespace

std::string extract_condition(std::string_view response)
{
    std::string text(response);
    if (auto fence = text.find("```"); fence != std::string::npos) {
        auto body = text.find('\n', fence);
        if (body != std::string::npos) {
            auto close = text.find("```", body);
            text = text.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1);
        }
    }
    std::string joined;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || looks_like_prose(line)) continue;
        if (!joined.empty()) joined += ' ';
        joined += line;
    }
    std::string s = normalize_strict_equality(trim(joined));
    for (bool changed = true; changed && !s.empty();) {
        changed = false;
        if (s.back() == ';') {
            s = trim(s.substr(0, s.size() - 1));
            changed = true;
        } else if (starts_with_word(s, "return")) {
            s = trim(s.substr(6));
            changed = true;
        } else if (starts_with_word(s, "if")) {
            std::string rest = trim(s.substr(2));
            auto close = rest.empty() || rest[0] != '(' ? std::string::npos : matching_paren(rest, 0);
            s = close == std::string::npos ? rest : trim(rest.substr(1, close - 1));
            changed = true;
        } else if (s.front() == '(' && matching_paren(s, 0) == s.size() - 1) {
            s = trim(s.substr(1, s.size() - 2));
            changed = true;
        }
    }
    if (s.empty()) throw EmptyResponse();
    return s;
}

std::vector<Message> generation_prompt(const GenerationConfig& config,
                                       const std::vector<corpus::LabeledInstance>& instances)
{
    std::string snippets;
    for (const auto& inst : instances) {
        if (inst.label != corpus::Label::Vulnerable) continue;
        if (!snippets.empty()) snippets += "\n\n";
        snippets += corpus::instance_snippet(inst);
    }
    if (snippets.empty()) {
        throw Error("generation needs at least one vulnerable instance");
    }
    return build_prompt(prompt_template(config.template_id), snippets);
}

std::string generate_candidate(const GenerationConfig& config, LlmBackend& backend,
                               const std::vector<corpus::LabeledInstance>& instances)
{
    CompletionRequest req{generation_prompt(config, instances), config.model, config.seed};
    return extract_condition(backend.complete(req));
}

ValidationReport validate_candidate(const std::string& condition_text,
                                    const std::vector<corpus::LabeledInstance>& labeled, double threshold,
                                    const std::string& candidate_id)
{
    ValidationReport report;
    report.candidate_id = candidate_id;
    report.condition_text = condition_text;
    report.threshold = threshold;
    if (labeled.empty()) {
        throw Error("validation needs at least one labeled instance");
    }

    std::optional<Registry> scratch;
    try {
        auto rule = rules::make_rule(candidate_id, "candidate", condition_text, 0, {});
        scratch.emplace();
        scratch->add(rules::install_rule(rule));
    } catch (const rules::RuleSyntaxError& e) {
        report.error = e.what();
    }

    for (const auto& inst : labeled) {
        Verdict v{inst.instance_id, inst.label, false, false};
        if (scratch) {
            try {
                const auto unit = parse_source(inst.source, inst.instance_id);
                for (const auto& f : scan(unit, *scratch)) {
                    if (!inst.marked_span || f.span.overlaps(*inst.marked_span)) {
                        v.fired = true;
                        break;
                    }
                }
            } catch (const Error&) {
                // An unparseable instance cannot fire.
            }
            v.correct = v.fired == (inst.label == corpus::Label::Vulnerable);
        }
        report.correct += v.correct ? 1 : 0;
        report.verdicts.push_back(std::move(v));
    }
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.verdicts.size());
    report.decision = report.error ? Decision::Rejected : gate(report.accuracy, threshold);
    return report;
}

std::string default_rule_id(const std::string& swe_id, const std::string& condition_text)
{
    return "gen-" + corpus::class_dir_name(swe_id) + "-" + sha256_hex(condition_text).substr(0, 10);
}

DetectorDescriptor integrate(const ValidationReport& report, const std::string& rule_id, const std::string& swe_id,
                             rules::CreatedFrom created_from, Registry& registry, rules::RuleStore& store)
{
    if (report.decision != Decision::Accepted) {
        throw RejectedCandidate("candidate '" + report.candidate_id + "' was rejected (accuracy " +
                                std::to_string(report.accuracy) + ")");
    }
    if (registry.contains(rule_id)) {
        throw DuplicateDetectorId(rule_id);
    }
    auto rule = rules::make_rule(rule_id, swe_id, report.condition_text, report.accuracy, std::move(created_from));
    store.add(rule);
    DetectorDescriptor d = rules::install_rule(rule);
    registry.add(d);
    return d;
}

LoopResult run_loop(const GenerationConfig& config, LlmBackend& backend, const std::string& swe_id,
                    const std::vector<corpus::LabeledInstance>& instances, Registry& registry,
                    rules::RuleStore& store, const std::string& instance_set)
{
    config.validate();
    LoopResult result;
    for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
        ++result.attempts;
        const std::string candidate_id = "attempt-" + std::to_string(attempt);
        std::string condition;
        try {
            condition = generate_candidate(config, backend, instances);
        } catch (const EmptyResponse& e) {
            ValidationReport empty;
            empty.candidate_id = candidate_id;
            empty.threshold = config.acceptance_threshold;
            empty.error = e.what();
            result.reports.push_back(std::move(empty));
            continue;
        }
        auto report = validate_candidate(condition, instances, config.acceptance_threshold, candidate_id);
        const bool accepted = report.decision == Decision::Accepted;
        result.reports.push_back(report);
        if (accepted) {
            const std::string rule_id = default_rule_id(swe_id, condition);
            result.descriptor = integrate(report, rule_id, swe_id,
                                          {std::string(prompt_template(config.template_id).name), instance_set},
                                          registry, store);
            result.rule = rules::make_rule(rule_id, swe_id, condition, report.accuracy,
                                           {std::string(prompt_template(config.template_id).name), instance_set});
            result.integrated = true;
            break;
        }
    }
    return result;
}

} // namespace solsentry::rulegen
