// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "solsentry/ast.hpp"
#include "solsentry/detectors.hpp"
#include "solsentry/errors.hpp"

namespace solsentry::rules {

class RuleSyntaxError : public Error {
public:
    RuleSyntaxError(std::size_t position, std::string expected, std::string found);

    std::size_t position;
    std::string expected;
    std::string found;
};

struct PathStep {
    bool is_index = false;
    std::string name;
    std::size_t index = 0;
    friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// `node` followed by member and index steps.
struct Path {
    std::vector<PathStep> steps;
    friend bool operator==(const Path&, const Path&) = default;
};

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge, Contains, Matches };
std::string_view cmp_op_text(CmpOp op);

struct RuleLiteral {
    enum class Kind { String, Number, Bool };
    Kind kind = Kind::String;
    /// Decoded text for strings, source spelling for numbers, "true"/"false".
    std::string text;
    double number = 0;
    bool boolean = false;
    friend bool operator==(const RuleLiteral&, const RuleLiteral&) = default;
};

struct RuleExpr {
    enum class Kind { Or, And, Not, Compare, Exists };
    Kind kind = Kind::Exists;
    std::vector<RuleExpr> operands; // Or/And: >= 2 operands; Not: exactly 1
    Path path;                      // Compare/Exists
    CmpOp op = CmpOp::Eq;           // Compare
    RuleLiteral literal;            // Compare
    /// Compiled pattern for `matches`; shared between copies.
    std::shared_ptr<const std::regex> regex;

    friend bool operator==(const RuleExpr& a, const RuleExpr& b)
    {
        return a.kind == b.kind && a.operands == b.operands && a.path == b.path && a.op == b.op &&
               a.literal == b.literal;
    }
};

/// Parses a condition. A path may omit the leading `node.`, so `memberName ==
/// "length"` reads as `node.memberName == "length"`.
RuleExpr parse_condition(std::string_view text);

/// Canonical textual form (always with explicit `node` roots).
std::string print(const RuleExpr& rule);

/// Evaluates against one node. Unresolvable paths are UNDEFINED; every
/// comparison with UNDEFINED is false, and `a != b` is `!(a == b)`.
bool eval(const RuleExpr& rule, const SourceUnit& unit, const AstNode& node);

/// Double negation removed, `!=` rewritten to `!(==)`, nested &&/|| flattened
/// and their operands sorted by printed form.
RuleExpr canonicalize(const RuleExpr& rule);

/// Literal constructors, handy when building rules programmatically.
RuleExpr compare(Path path, CmpOp op, RuleLiteral literal);
RuleExpr exists(Path path);
RuleExpr negate(RuleExpr e);
RuleExpr conjoin(std::vector<RuleExpr> operands);
RuleExpr disjoin(std::vector<RuleExpr> operands);

struct CreatedFrom {
    std::string template_id;
    std::string instance_set;
    friend bool operator==(const CreatedFrom&, const CreatedFrom&) = default;
};

struct GeneratedRule {
    std::string rule_id;
    std::string swe_id;
    RuleExpr condition;
    std::string condition_text;
    std::string origin_label = "generated";
    double acceptance_accuracy = 0;
    CreatedFrom created_from;
};

/// Builds a rule from its parts, parsing `condition_text`.
GeneratedRule make_rule(std::string rule_id, std::string swe_id, std::string condition_text,
                        double acceptance_accuracy, CreatedFrom created_from,
                        std::string origin_label = "generated");

/// Detector that reports every node on which the condition holds.
DetectorDescriptor install_rule(const GeneratedRule& rule);

} // namespace solsentry::rules
