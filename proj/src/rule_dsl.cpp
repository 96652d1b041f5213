// SPDX-License-Identifier: Apache-2.0
#include "solsentry/rule_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <variant>

namespace solsentry::rules {

RuleSyntaxError::RuleSyntaxError(std::size_t pos, std::string exp, std::string fnd)
    : Error("rule syntax error at offset " + std::to_string(pos) + ": expected " + exp + ", found " + fnd),
      position(pos), expected(std::move(exp)), found(std::move(fnd))
{
}

std::string_view cmp_op_text(CmpOp op)
{
    switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Contains: return "contains";
    case CmpOp::Matches: return "matches";
    }
    return "?";
}

RuleExpr compare(Path path, CmpOp op, RuleLiteral literal)
{
    RuleExpr e;
    e.kind = RuleExpr::Kind::Compare;
    e.path = std::move(path);
    e.op = op;
    e.literal = std::move(literal);
    if (op == CmpOp::Matches) {
        e.regex = std::make_shared<const std::regex>(e.literal.text, std::regex::ECMAScript);
    }
    return e;
}

RuleExpr exists(Path path)
{
    RuleExpr e;
    e.kind = RuleExpr::Kind::Exists;
    e.path = std::move(path);
    return e;
}

RuleExpr negate(RuleExpr inner)
{
    RuleExpr e;
    e.kind = RuleExpr::Kind::Not;
    e.operands.push_back(std::move(inner));
    return e;
}

RuleExpr conjoin(std::vector<RuleExpr> operands)
{
    if (operands.size() == 1) {
        return std::move(operands.front());
    }
    RuleExpr e;
    e.kind = RuleExpr::Kind::And;
    e.operands = std::move(operands);
    return e;
}

RuleExpr disjoin(std::vector<RuleExpr> operands)
{
    if (operands.size() == 1) {
        return std::move(operands.front());
    }
    RuleExpr e;
    e.kind = RuleExpr::Kind::Or;
    e.operands = std::move(operands);
    return e;
}

// ---- parsing ---------------------------------------------------------------

namespace {

bool ident_start(char c)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

class ConditionParser {
public:
    explicit ConditionParser(std::string_view text) : s_(text) {}

    RuleExpr run()
    {
        RuleExpr e = parse_or();
        skip_ws();
        if (pos_ < s_.size()) {
            fail("'&&', '||' or end of condition");
        }
        return e;
    }

private:
    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }

    std::string found() const
    {
        if (pos_ >= s_.size()) {
            return "end of condition";
        }
        std::size_t n = std::min<std::size_t>(12, s_.size() - pos_);
        return "'" + std::string(s_.substr(pos_, n)) + "'";
    }

    [[noreturn]] void fail(const std::string& expected) const { throw RuleSyntaxError(pos_, expected, found()); }

    bool accept(std::string_view tok)
    {
        skip_ws();
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view tok)
    {
        if (!accept(tok)) {
            fail("'" + std::string(tok) + "'");
        }
    }

    std::string peek_word()
    {
        skip_ws();
        std::size_t i = pos_;
        if (i >= s_.size() || !ident_start(s_[i])) {
            return {};
        }
        while (i < s_.size() && ident_char(s_[i])) {
            ++i;
        }
        return std::string(s_.substr(pos_, i - pos_));
    }

    RuleExpr parse_or()
    {
        std::vector<RuleExpr> ops;
        ops.push_back(parse_and());
        while (accept("||")) {
            ops.push_back(parse_and());
        }
        return disjoin(std::move(ops));
    }

    RuleExpr parse_and()
    {
        std::vector<RuleExpr> ops;
        ops.push_back(parse_unary());
        while (accept("&&")) {
            ops.push_back(parse_unary());
        }
        return conjoin(std::move(ops));
    }

    RuleExpr parse_unary()
    {
        skip_ws();
        if (s_.substr(pos_, 1) == "!" && s_.substr(pos_, 2) != "!=") {
            ++pos_;
            return negate(parse_unary());
        }
        return parse_primary();
    }

    RuleExpr parse_primary()
    {
        if (accept("(")) {
            RuleExpr e = parse_or();
            expect(")");
            return e;
        }
        std::string word = peek_word();
        if (word == "exists") {
            pos_ += word.size();
            expect("(");
            Path p = parse_path();
            expect(")");
            return exists(std::move(p));
        }
        if (word.empty()) {
            fail("'(', '!', 'exists(' or a path");
        }
        Path p = parse_path();
        CmpOp op = parse_op();
        std::size_t lit_pos = (skip_ws(), pos_);
        RuleLiteral lit = parse_literal();
        try {
            return compare(std::move(p), op, std::move(lit));
        } catch (const std::regex_error&) {
            pos_ = lit_pos;
            throw RuleSyntaxError(lit_pos, "a valid regular expression", found());
        }
    }

    Path parse_path()
    {
        skip_ws();
        Path p;
        std::string word = peek_word();
        if (word.empty()) {
            fail("path");
        }
        pos_ += word.size();
        if (word != "node") {
            // Shorthand: a path may start directly with a field of `node`.
            p.steps.push_back({false, word, 0});
        }
        for (;;) {
            if (pos_ < s_.size() && s_[pos_] == '.') {
                ++pos_;
                std::string name = peek_word();
                if (name.empty()) {
                    fail("field name");
                }
                pos_ += name.size();
                p.steps.push_back({false, name, 0});
            } else if (pos_ < s_.size() && s_[pos_] == '[') {
                ++pos_;
                std::size_t start = pos_;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                    ++pos_;
                }
                if (start == pos_) {
                    fail("list index");
                }
                std::size_t index = 0;
                auto r = std::from_chars(s_.data() + start, s_.data() + pos_, index);
                if (r.ec != std::errc{}) {
                    pos_ = start;
                    fail("list index");
                }
                if (pos_ >= s_.size() || s_[pos_] != ']') {
                    fail("']'");
                }
                ++pos_;
                p.steps.push_back({true, {}, index});
            } else {
                return p;
            }
        }
    }

    CmpOp parse_op()
    {
        skip_ws();
        static const std::pair<std::string_view, CmpOp> ops[] = {
            {"==", CmpOp::Eq}, {"!=", CmpOp::Ne}, {"<=", CmpOp::Le}, {">=", CmpOp::Ge},
            {"<", CmpOp::Lt},  {">", CmpOp::Gt},
        };
        for (const auto& [tok, op] : ops) {
            if (s_.substr(pos_, tok.size()) == tok) {
                pos_ += tok.size();
                return op;
            }
        }
        std::string word = peek_word();
        if (word == "contains") {
            pos_ += word.size();
            return CmpOp::Contains;
        }
        if (word == "matches") {
            pos_ += word.size();
            return CmpOp::Matches;
        }
        fail("comparison operator");
    }

    RuleLiteral parse_literal()
    {
        skip_ws();
        RuleLiteral lit;
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
            char q = s_[pos_++];
            lit.kind = RuleLiteral::Kind::String;
            while (pos_ < s_.size() && s_[pos_] != q) {
                char c = s_[pos_++];
                if (c == '\\' && pos_ < s_.size()) {
                    char e = s_[pos_++];
                    switch (e) {
                    case 'n': lit.text += '\n'; break;
                    case 't': lit.text += '\t'; break;
                    case 'r': lit.text += '\r'; break;
                    default: lit.text += e; break;
                    }
                } else {
                    lit.text += c;
                }
            }
            if (pos_ >= s_.size()) {
                fail("closing quote");
            }
            ++pos_;
            return lit;
        }
        std::string word = peek_word();
        if (word == "true" || word == "false") {
            pos_ += word.size();
            lit.kind = RuleLiteral::Kind::Bool;
            lit.text = word;
            lit.boolean = word == "true";
            return lit;
        }
        std::size_t start = pos_;
        if (pos_ < s_.size() && s_[pos_] == '-') {
            ++pos_;
        }
        bool digits = false;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
            digits = digits || s_[pos_] != '.';
            ++pos_;
        }
        if (!digits) {
            pos_ = start;
            fail("string, number, true or false");
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t exp = pos_ + 1;
            if (exp < s_.size() && (s_[exp] == '+' || s_[exp] == '-')) ++exp;
            if (exp < s_.size() && std::isdigit(static_cast<unsigned char>(s_[exp]))) {
                pos_ = exp;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            }
        }
        lit.kind = RuleLiteral::Kind::Number;
        lit.text = std::string(s_.substr(start, pos_ - start));
        char* end = nullptr;
        lit.number = std::strtod(lit.text.c_str(), &end);
        if (end != lit.text.c_str() + lit.text.size()) {
            pos_ = start;
            fail("number");
        }
        return lit;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace

RuleExpr parse_condition(std::string_view text)
{
    return ConditionParser(text).run();
}

// ---- printing --------------------------------------------------------------

namespace {

std::string print_path(const Path& p)
{
    std::string s = "node";
    for (const auto& step : p.steps) {
        if (step.is_index) {
            s += "[" + std::to_string(step.index) + "]";
        } else {
            s += "." + step.name;
        }
    }
    return s;
}

std::string print_literal(const RuleLiteral& lit)
{
    if (lit.kind != RuleLiteral::Kind::String) {
        return lit.text;
    }
    std::string s = "\"";
    for (char c : lit.text) {
        switch (c) {
        case '"': s += "\\\""; break;
        case '\\': s += "\\\\"; break;
        case '\n': s += "\\n"; break;
        case '\t': s += "\\t"; break;
        case '\r': s += "\\r"; break;
        default: s += c;
        }
    }
    return s + "\"";
}

void print_into(const RuleExpr& e, std::string& out);

void print_operand(const RuleExpr& parent, const RuleExpr& child, std::string& out)
{
    // Nested groups of the same connective keep their parentheses so the tree
    // shape survives a print/parse round trip.
    bool parens = child.kind == RuleExpr::Kind::Or ||
                  (child.kind == RuleExpr::Kind::And && parent.kind == RuleExpr::Kind::And);
    if (parens) {
        out += "(";
    }
    print_into(child, out);
    if (parens) {
        out += ")";
    }
}

void print_into(const RuleExpr& e, std::string& out)
{
    switch (e.kind) {
    case RuleExpr::Kind::Or:
    case RuleExpr::Kind::And: {
        const char* sep = e.kind == RuleExpr::Kind::Or ? " || " : " && ";
        for (std::size_t i = 0; i < e.operands.size(); ++i) {
            if (i) {
                out += sep;
            }
            if (e.kind == RuleExpr::Kind::Or && e.operands[i].kind != RuleExpr::Kind::Or) {
                print_into(e.operands[i], out);
            } else {
                print_operand(e, e.operands[i], out);
            }
        }
        return;
    }
    case RuleExpr::Kind::Not: {
        const RuleExpr& inner = e.operands.front();
        out += "!";
        if (inner.kind == RuleExpr::Kind::Not || inner.kind == RuleExpr::Kind::Exists) {
            print_into(inner, out);
        } else {
            out += "(";
            print_into(inner, out);
            out += ")";
        }
        return;
    }
    case RuleExpr::Kind::Compare:
        out += print_path(e.path);
        out += " ";
        out += cmp_op_text(e.op);
        out += " ";
        out += print_literal(e.literal);
        return;
    case RuleExpr::Kind::Exists:
        out += "exists(" + print_path(e.path) + ")";
        return;
    }
}

} // namespace

std::string print(const RuleExpr& rule)
{
    std::string out;
    print_into(rule, out);
    return out;
}

// ---- evaluation ------------------------------------------------------------

namespace {

struct Undefined {};
struct NodeList {
    const Slot* slot;
};
using Value = std::variant<Undefined, const AstNode*, NodeList, const nlohmann::json*, std::string, double>;

Value from_json(const nlohmann::json* j)
{
    if (j->is_null()) {
        return Undefined{};
    }
    return j;
}

Value resolve(const Path& path, const SourceUnit& unit, const AstNode& start)
{
    Value cur = &start;
    for (const auto& step : path.steps) {
        if (auto* n = std::get_if<const AstNode*>(&cur)) {
            const AstNode& node = **n;
            if (step.is_index) {
                return Undefined{};
            }
            if (step.name == "nodeType") {
                cur = node.type_name;
                continue;
            }
            if (step.name == "id") {
                cur = static_cast<double>(node.id);
                continue;
            }
            if (auto it = node.attributes.find(step.name); it != node.attributes.end()) {
                cur = from_json(&*it);
            } else if (const Slot* s = node.slot(step.name)) {
                if (s->is_list) {
                    cur = NodeList{s};
                } else if (!s->nodes.empty() && s->nodes.front() != kNoNode) {
                    cur = &unit.node(s->nodes.front());
                } else {
                    return Undefined{};
                }
            } else {
                return Undefined{};
            }
        } else if (auto* list = std::get_if<NodeList>(&cur)) {
            if (!step.is_index || step.index >= list->slot->nodes.size() ||
                list->slot->nodes[step.index] == kNoNode) {
                return Undefined{};
            }
            cur = &unit.node(list->slot->nodes[step.index]);
        } else if (auto* j = std::get_if<const nlohmann::json*>(&cur)) {
            const nlohmann::json& v = **j;
            if (step.is_index && v.is_array() && step.index < v.size()) {
                cur = from_json(&v[step.index]);
            } else if (!step.is_index && v.is_object() && v.contains(step.name)) {
                cur = from_json(&v[step.name]);
            } else {
                return Undefined{};
            }
        } else {
            return Undefined{};
        }
        if (std::holds_alternative<Undefined>(cur)) {
            return cur;
        }
    }
    return cur;
}

enum class Scalar { None, Text, Number, Bool };

struct ScalarValue {
    Scalar kind = Scalar::None;
    std::string text;
    double number = 0;
    bool boolean = false;
};

ScalarValue scalar(const Value& v)
{
    ScalarValue s;
    if (auto* t = std::get_if<std::string>(&v)) {
        s.kind = Scalar::Text;
        s.text = *t;
    } else if (auto* d = std::get_if<double>(&v)) {
        s.kind = Scalar::Number;
        s.number = *d;
    } else if (auto* j = std::get_if<const nlohmann::json*>(&v)) {
        const auto& x = **j;
        if (x.is_string()) {
            s.kind = Scalar::Text;
            s.text = x.get<std::string>();
        } else if (x.is_boolean()) {
            s.kind = Scalar::Bool;
            s.boolean = x.get<bool>();
        } else if (x.is_number()) {
            s.kind = Scalar::Number;
            s.number = x.get<double>();
        }
    }
    return s;
}

std::optional<double> text_as_number(const std::string& t)
{
    if (t.empty()) {
        return std::nullopt;
    }
    char* end = nullptr;
    double d = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || std::isnan(d)) {
        return std::nullopt;
    }
    return d;
}

template <typename T>
bool ordered(CmpOp op, const T& a, const T& b)
{
    switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
    default: return false;
    }
}

bool compare_values(const RuleExpr& e, const ScalarValue& lhs)
{
    const RuleLiteral& lit = e.literal;
    if (e.op == CmpOp::Contains || e.op == CmpOp::Matches) {
        if (lhs.kind != Scalar::Text || lit.kind != RuleLiteral::Kind::String) {
            return false;
        }
        if (e.op == CmpOp::Contains) {
            return lhs.text.find(lit.text) != std::string::npos;
        }
        try {
            return e.regex && std::regex_match(lhs.text, *e.regex);
        } catch (const std::regex_error&) {
            return false;
        }
    }
    switch (lit.kind) {
    case RuleLiteral::Kind::String:
        if (lhs.kind == Scalar::Text) {
            return ordered(e.op, lhs.text, lit.text);
        }
        if (lhs.kind == Scalar::Number) {
            auto n = text_as_number(lit.text);
            return n && ordered(e.op, lhs.number, *n);
        }
        if (lhs.kind == Scalar::Bool && e.op == CmpOp::Eq) {
            return lit.text == (lhs.boolean ? "true" : "false");
        }
        return false;
    case RuleLiteral::Kind::Number:
        if (lhs.kind == Scalar::Number) {
            return ordered(e.op, lhs.number, lit.number);
        }
        if (lhs.kind == Scalar::Text) {
            auto n = text_as_number(lhs.text);
            return n && ordered(e.op, *n, lit.number);
        }
        return false;
    case RuleLiteral::Kind::Bool:
        if (e.op != CmpOp::Eq) {
            return false;
        }
        if (lhs.kind == Scalar::Bool) {
            return lhs.boolean == lit.boolean;
        }
        if (lhs.kind == Scalar::Text) {
            return lhs.text == lit.text;
        }
        return false;
    }
    return false;
}

} // namespace

bool eval(const RuleExpr& rule, const SourceUnit& unit, const AstNode& node)
{
    switch (rule.kind) {
    case RuleExpr::Kind::Or:
        return std::any_of(rule.operands.begin(), rule.operands.end(),
                           [&](const RuleExpr& e) { return eval(e, unit, node); });
    case RuleExpr::Kind::And:
        return std::all_of(rule.operands.begin(), rule.operands.end(),
                           [&](const RuleExpr& e) { return eval(e, unit, node); });
    case RuleExpr::Kind::Not:
        return !eval(rule.operands.front(), unit, node);
    case RuleExpr::Kind::Exists:
        return !std::holds_alternative<Undefined>(resolve(rule.path, unit, node));
    case RuleExpr::Kind::Compare: {
        if (rule.op == CmpOp::Ne) {
            RuleExpr eq = rule;
            eq.op = CmpOp::Eq;
            return !eval(eq, unit, node);
        }
        Value v = resolve(rule.path, unit, node);
        return compare_values(rule, scalar(v));
    }
    }
    return false;
}

// ---- canonical form --------------------------------------------------------

RuleExpr canonicalize(const RuleExpr& rule)
{
    switch (rule.kind) {
    case RuleExpr::Kind::Not: {
        RuleExpr inner = canonicalize(rule.operands.front());
        if (inner.kind == RuleExpr::Kind::Not) {
            return std::move(inner.operands.front());
        }
        return negate(std::move(inner));
    }
    case RuleExpr::Kind::Compare:
        if (rule.op == CmpOp::Ne) {
            RuleExpr eq = rule;
            eq.op = CmpOp::Eq;
            return negate(std::move(eq));
        }
        return rule;
    case RuleExpr::Kind::Exists:
        return rule;
    case RuleExpr::Kind::Or:
    case RuleExpr::Kind::And: {
        std::vector<RuleExpr> flat;
        for (const auto& op : rule.operands) {
            RuleExpr c = canonicalize(op);
            if (c.kind == rule.kind) {
                for (auto& x : c.operands) {
                    flat.push_back(std::move(x));
                }
            } else {
                flat.push_back(std::move(c));
            }
        }
        std::vector<std::pair<std::string, RuleExpr>> keyed;
        for (auto& x : flat) {
            std::string key = print(x);
            keyed.emplace_back(std::move(key), std::move(x));
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        RuleExpr out;
        out.kind = rule.kind;
        for (auto& [k, x] : keyed) {
            out.operands.push_back(std::move(x));
        }
        return out;
    }
    }
    return rule;
}

// ---- rules as detectors ----------------------------------------------------

GeneratedRule make_rule(std::string rule_id, std::string swe_id, std::string condition_text,
                        double acceptance_accuracy, CreatedFrom created_from, std::string origin_label)
{
    GeneratedRule r;
    r.condition = parse_condition(condition_text);
    r.rule_id = std::move(rule_id);
    r.swe_id = std::move(swe_id);
    r.condition_text = std::move(condition_text);
    r.acceptance_accuracy = acceptance_accuracy;
    r.created_from = std::move(created_from);
    r.origin_label = std::move(origin_label);
    return r;
}

DetectorDescriptor install_rule(const GeneratedRule& rule)
{
    DetectorDescriptor d;
    d.detector_id = rule.rule_id;
    d.swe_id = rule.swe_id;
    d.origin = Origin::Generated;
    d.description = "generated rule";
    d.condition_text = rule.condition_text;
    d.acceptance_accuracy = rule.acceptance_accuracy;
    auto condition = std::make_shared<const RuleExpr>(rule.condition);
    std::string id = rule.rule_id;
    std::string swe = rule.swe_id;
    d.run = [condition, id, swe](const SourceUnit& unit, const ScanOptions&) {
        std::vector<Finding> out;
        for (const AstNode& n : unit.nodes()) {
            if (eval(*condition, unit, n)) {
                out.push_back(make_finding(unit, n, swe, id, "generated rule '" + id + "' matched " + n.type_name,
                                           Severity::Medium, Origin::Generated));
            }
        }
        return out;
    };
    return d;
}

} // namespace solsentry::rules
