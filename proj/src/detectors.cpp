// SPDX-License-Identifier: Apache-2.0
#include "solsentry/detectors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "solsentry/cfg.hpp"
#include "solsentry/errors.hpp"

namespace solsentry {

std::string_view severity_name(Severity s)
{
    switch (s) {
    case Severity::High: return "high";
    case Severity::Medium: return "medium";
    case Severity::Info: return "info";
    }
    return "?";
}

std::string_view origin_name(Origin o)
{
    return o == Origin::Builtin ? "builtin" : "generated";
}

bool finding_less(const Finding& a, const Finding& b)
{
    return std::tie(a.file_id, a.span.offset, a.detector_id, a.span.length, a.message) <
           std::tie(b.file_id, b.span.offset, b.detector_id, b.span.length, b.message);
}

Registry& Registry::add(DetectorDescriptor descriptor)
{
    if (detectors_.contains(descriptor.detector_id)) {
        throw DuplicateDetectorId(descriptor.detector_id);
    }
    std::string id = descriptor.detector_id;
    detectors_.emplace(std::move(id), std::move(descriptor));
    return *this;
}

bool Registry::remove(std::string_view detector_id)
{
    auto it = detectors_.find(detector_id);
    if (it == detectors_.end()) {
        return false;
    }
    detectors_.erase(it);
    return true;
}

bool Registry::set_enabled(std::string_view detector_id, bool enabled)
{
    auto it = detectors_.find(detector_id);
    if (it == detectors_.end()) {
        return false;
    }
    it->second.enabled = enabled;
    return true;
}

const DetectorDescriptor* Registry::find(std::string_view detector_id) const
{
    auto it = detectors_.find(detector_id);
    return it == detectors_.end() ? nullptr : &it->second;
}

std::vector<const DetectorDescriptor*> Registry::descriptors() const
{
    std::vector<const DetectorDescriptor*> out;
    for (const auto& [id, d] : detectors_) {
        out.push_back(&d);
    }
    return out;
}

Finding make_finding(const SourceUnit& unit, const AstNode& node, std::string swe_id, std::string detector_id,
                     std::string message, Severity severity, Origin origin)
{
    Finding f;
    f.swe_id = std::move(swe_id);
    f.detector_id = std::move(detector_id);
    f.origin = origin;
    f.file_id = unit.file_id();
    f.span = node.span;
    std::tie(f.line, f.column) = unit.line_column(node.span.offset);
    f.message = std::move(message);
    f.severity = severity;
    return f;
}

std::vector<Finding> scan(const SourceUnit& unit, const Registry& registry, const ScanOptions& options)
{
    std::vector<Finding> out;
    for (const DetectorDescriptor* d : registry.descriptors()) {
        if (!d->enabled || !d->run) {
            continue;
        }
        try {
            auto found = d->run(unit, options);
            out.insert(out.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
        } catch (const std::exception& e) {
            Finding f;
            f.swe_id = d->swe_id;
            f.detector_id = d->detector_id;
            f.origin = d->origin;
            f.file_id = unit.file_id();
            f.line = 1;
            f.column = 1;
            f.message = std::string("detector failed: ") + e.what();
            f.severity = Severity::Info;
            out.push_back(std::move(f));
        }
    }
    std::sort(out.begin(), out.end(), finding_less);
    return out;
}

namespace {

bool is_member(const AstNode* n, std::string_view member)
{
    return n && n->type == NodeType::MemberAccess && n->attr_string("memberName") == member;
}

bool is_identifier(const AstNode* n, std::string_view name)
{
    return n && n->type == NodeType::Identifier && n->attr_string("name") == name;
}

std::set<std::string> contract_names(const SourceUnit& unit)
{
    std::set<std::string> names;
    for (const AstNode* c : unit.contracts()) {
        names.insert(c->attr_string("name"));
    }
    return names;
}

/// Names of variables declared anywhere in the unit with a user-defined type.
std::set<std::string> contract_typed_variables(const SourceUnit& unit)
{
    std::set<std::string> names;
    for (const AstNode& n : unit.nodes()) {
        if (n.type != NodeType::VariableDeclaration) {
            continue;
        }
        const AstNode* t = unit.child(n, "typeName");
        if (t && t->type == NodeType::UserDefinedTypeName) {
            names.insert(n.attr_string("name"));
        }
    }
    return names;
}

const AstNode* enclosing(AncestorStack ancestors, std::initializer_list<NodeType> types)
{
    for (auto it = ancestors.rbegin(); it != ancestors.rend(); ++it) {
        for (NodeType t : types) {
            if ((*it)->type == t) {
                return *it;
            }
        }
    }
    return nullptr;
}

const AstNode* enclosing_statement(AncestorStack ancestors, const AstNode& self)
{
    if (is_statement(self.type) && self.type != NodeType::Block) {
        return &self;
    }
    for (auto it = ancestors.rbegin(); it != ancestors.rend(); ++it) {
        if (is_statement((*it)->type) && (*it)->type != NodeType::Block) {
            return *it;
        }
    }
    return nullptr;
}

/// Strips index and member accesses down to the base expression.
const AstNode* access_root(const SourceUnit& unit, const AstNode* n)
{
    while (n) {
        if (n->type == NodeType::IndexAccess) {
            n = unit.child(*n, "baseExpression");
        } else if (n->type == NodeType::MemberAccess) {
            n = unit.child(*n, "expression");
        } else {
            return n;
        }
    }
    return nullptr;
}

bool mentions(const SourceUnit& unit, const AstNode& expr, std::string_view name)
{
    bool found = false;
    walk_subtree(unit, expr, [&](const AstNode& n, AncestorStack) {
        found = found || is_identifier(&n, name);
    });
    return found;
}

bool pragma_requires_060(const SourceUnit& unit)
{
    auto c = unit.solidity_constraint();
    return c && c->lower_bound() >= Version{0, 6, 0};
}

std::string swe_of(std::string_view id)
{
    if (id == detector_ids::kSwe161) return "SWE-161";
    if (id == detector_ids::kSwe134) return "SWE-134";
    if (id == detector_ids::kSwe114) return "SWE-114";
    if (id == detector_ids::kSwe138) return "SWE-138";
    return "SWE-140";
}

Finding builtin(const SourceUnit& unit, const AstNode& node, std::string_view id, std::string message, Severity sev)
{
    return make_finding(unit, node, swe_of(id), std::string(id), std::move(message), sev);
}

struct UnitFacts {
    explicit UnitFacts(const SourceUnit& unit)
        : contracts(contract_names(unit)), typed_vars(contract_typed_variables(unit))
    {
    }
    std::set<std::string> contracts;
    std::set<std::string> typed_vars;
};

bool ether_transfer(const SourceUnit& unit, const UnitFacts& facts, const AstNode& call, std::string_view member)
{
    if (call.type != NodeType::FunctionCall) {
        return false;
    }
    const AstNode* callee = unit.child(call, "expression");
    if (!is_member(callee, member) || unit.children(call, "arguments").size() != 1) {
        return false;
    }
    const AstNode* receiver = unit.child(*callee, "expression");
    if (!receiver) {
        return false;
    }
    if (receiver->type == NodeType::Identifier) {
        const std::string name = receiver->attr_string("name");
        return !facts.contracts.contains(name) && !facts.typed_vars.contains(name);
    }
    if (receiver->type == NodeType::FunctionCall) {
        // Conversion to a contract type: `Token(addr).transfer(x)`.
        const AstNode* conv = unit.child(*receiver, "expression");
        if (conv && conv->type == NodeType::Identifier && facts.contracts.contains(conv->attr_string("name"))) {
            return false;
        }
    }
    return true;
}

} // namespace

bool is_ether_transfer(const SourceUnit& unit, const AstNode& call, std::string_view member)
{
    return ether_transfer(unit, UnitFacts(unit), call, member);
}

std::vector<Finding> detect_swe161(const SourceUnit& unit, const ScanOptions& options)
{
    std::vector<Finding> out;
    if (options.pragma_gate && pragma_requires_060(unit)) {
        return out;
    }
    const auto id = detector_ids::kSwe161;
    walk(unit, [&](const AstNode& n, AncestorStack) {
        if (n.type == NodeType::UnaryOperation) {
            std::string op = n.attr_string("operator");
            if ((op == "--" || op == "++") && is_member(unit.child(n, "subExpression"), "length")) {
                out.push_back(builtin(unit, n, id, "array length modified directly with '" + op + "'",
                                      Severity::High));
            }
        } else if (n.type == NodeType::Assignment) {
            std::string op = n.attr_string("operator");
            if ((op == "=" || op == "-=" || op == "+=") && is_member(unit.child(n, "leftHandSide"), "length")) {
                out.push_back(builtin(unit, n, id, "array length assigned with '" + op + "'", Severity::High));
            }
        }
    });
    return out;
}

std::vector<Finding> detect_swe134(const SourceUnit& unit, const ScanOptions&)
{
    std::vector<Finding> out;
    const UnitFacts facts(unit);
    const auto id = detector_ids::kSwe134;
    walk(unit, [&](const AstNode& n, AncestorStack) {
        if (n.type == NodeType::FunctionCallOptions) {
            const auto names = n.attributes.value("names", nlohmann::json::array());
            const Slot* opts = n.slot("options");
            for (std::size_t i = 0; opts && i < opts->nodes.size() && i < names.size(); ++i) {
                if (names[i] != "gas" || opts->nodes[i] == kNoNode) {
                    continue;
                }
                const AstNode& value = unit.node(opts->nodes[i]);
                if (value.type == NodeType::Literal) {
                    out.push_back(builtin(unit, value, id, "hardcoded gas amount in call options", Severity::Medium));
                }
            }
            return;
        }
        if (n.type != NodeType::FunctionCall) {
            return;
        }
        const AstNode* callee = unit.child(n, "expression");
        auto args = unit.children(n, "arguments");
        if (is_member(callee, "gas") && args.size() == 1 && args[0]->type == NodeType::Literal) {
            out.push_back(builtin(unit, n, id, "hardcoded gas amount via .gas()", Severity::Medium));
        } else if (ether_transfer(unit, facts, n, "transfer") || ether_transfer(unit, facts, n, "send")) {
            std::string member = callee->attr_string("memberName");
            out.push_back(builtin(unit, n, id, "." + member + "() forwards a fixed 2300 gas stipend",
                                  Severity::Medium));
        }
    });
    return out;
}

std::vector<Finding> detect_swe114(const SourceUnit& unit, const ScanOptions&)
{
    std::vector<Finding> out;
    std::set<std::string> mappings;
    for (const AstNode& n : unit.nodes()) {
        if (n.type == NodeType::VariableDeclaration && n.attr_bool("stateVariable")) {
            const AstNode* t = unit.child(n, "typeName");
            if (t && t->type == NodeType::Mapping) {
                mappings.insert(n.attr_string("name"));
            }
        }
    }
    if (mappings.empty()) {
        return out;
    }
    for (const AstNode* contract : unit.contracts()) {
        for (const AstNode* fn : unit.children(*contract, "nodes")) {
            if (fn->type != NodeType::FunctionDefinition || fn->attr_string("name") != "approve" ||
                !unit.child(*fn, "body")) {
                continue;
            }
            std::string vis = fn->attr_string("visibility");
            if (vis != "public" && vis != "external") {
                continue;
            }
            auto params = unit.children(*unit.child(*fn, "parameters"), "parameters");
            if (params.empty()) {
                continue;
            }
            const std::string amount = params.back()->attr_string("name");
            if (amount.empty()) {
                continue;
            }
            Cfg cfg = build_cfg(unit, *fn);

            // Requires of the form `... == 0` over the amount or the written mapping.
            auto guard_blocks = [&](const std::string& mapping) {
                std::vector<std::size_t> blocks;
                for (NodeId sid : body_statements(unit, *fn)) {
                    const AstNode& s = unit.node(sid);
                    if (!is_call_statement(unit, s, "require")) {
                        continue;
                    }
                    auto args = unit.children(*unit.child(s, "expression"), "arguments");
                    if (args.empty()) {
                        continue;
                    }
                    bool zero_check = false;
                    walk_subtree(unit, *args[0], [&](const AstNode& e, AncestorStack) {
                        if (e.type != NodeType::BinaryOperation || e.attr_string("operator") != "==") {
                            return;
                        }
                        const AstNode* l = unit.child(e, "leftExpression");
                        const AstNode* r = unit.child(e, "rightExpression");
                        auto is_zero = [](const AstNode* x) {
                            return x && x->type == NodeType::Literal && x->attr_string("value") == "0";
                        };
                        const AstNode* other = is_zero(l) ? r : is_zero(r) ? l : nullptr;
                        if (!other) {
                            return;
                        }
                        const AstNode* root = access_root(unit, other);
                        if (mentions(unit, *other, amount) || is_identifier(root, mapping)) {
                            zero_check = true;
                        }
                    });
                    if (zero_check) {
                        if (auto b = cfg.block_of(sid)) {
                            blocks.push_back(*b);
                        }
                    }
                }
                return blocks;
            };

            walk_subtree(unit, *unit.child(*fn, "body"), [&](const AstNode& n, AncestorStack ancestors) {
                if (n.type != NodeType::Assignment || n.attr_string("operator") != "=") {
                    return;
                }
                const AstNode* lhs = unit.child(n, "leftHandSide");
                const AstNode* rhs = unit.child(n, "rightHandSide");
                if (!lhs || lhs->type != NodeType::IndexAccess || !rhs || !mentions(unit, *rhs, amount)) {
                    return;
                }
                const AstNode* root = access_root(unit, lhs);
                if (!root || root->type != NodeType::Identifier || !mappings.contains(root->attr_string("name"))) {
                    return;
                }
                const AstNode* stmt = enclosing_statement(ancestors, n);
                constexpr std::size_t kNone = static_cast<std::size_t>(-1);
                const std::size_t write_block = stmt ? cfg.block_of(stmt->id).value_or(kNone) : kNone;
                bool guarded = false;
                for (std::size_t g : guard_blocks(root->attr_string("name"))) {
                    // require ends its block, so a guard in the write's own block comes after it.
                    if (write_block != kNone && g != write_block && dominates(cfg, g, write_block)) {
                        guarded = true;
                    }
                }
                if (!guarded) {
                    out.push_back(builtin(unit, n, detector_ids::kSwe114,
                                          "approve() overwrites an allowance without requiring it to be reset to "
                                          "zero first",
                                          Severity::Medium));
                }
            });
        }
    }
    return out;
}

std::vector<Finding> detect_swe138(const SourceUnit& unit, const ScanOptions& options)
{
    std::vector<Finding> out;
    const auto id = detector_ids::kSwe138;
    const UnitFacts facts(unit);
    std::map<std::string, const AstNode*> by_name;
    for (const AstNode* c : unit.contracts()) {
        by_name[c->attr_string("name")] = c;
    }

    auto has_egress = [&](const AstNode& contract) {
        bool found = false;
        walk_subtree(unit, contract, [&](const AstNode& n, AncestorStack) {
            if (found) {
                return;
            }
            if (n.type == NodeType::FunctionCallOptions) {
                for (const auto& name : n.attributes.value("names", nlohmann::json::array())) {
                    found = found || name == "value";
                }
            } else if (n.type == NodeType::FunctionCall) {
                const AstNode* callee = unit.child(n, "expression");
                found = ether_transfer(unit, facts, n, "transfer") || ether_transfer(unit, facts, n, "send") ||
                        (is_member(callee, "value") && unit.children(n, "arguments").size() == 1) ||
                        is_identifier(callee, "selfdestruct") || is_identifier(callee, "suicide");
            }
        });
        return found;
    };

    for (const AstNode* contract : unit.contracts()) {
        if (contract->attr_string("contractKind") == "interface") {
            continue;
        }
        bool receives = false;
        for (const AstNode* m : unit.children(*contract, "nodes")) {
            if (m->type != NodeType::FunctionDefinition) {
                continue;
            }
            bool payable = m->attr_string("stateMutability") == "payable";
            if (payable || m->attr_string("kind") == "receive") {
                receives = true;
            }
        }
        if (!receives) {
            continue;
        }
        // Egress may live in a base contract declared in the same file.
        bool egress = false;
        std::set<std::string> seen;
        std::vector<const AstNode*> pending{contract};
        while (!pending.empty() && !egress) {
            const AstNode* c = pending.back();
            pending.pop_back();
            if (!seen.insert(c->attr_string("name")).second) {
                continue;
            }
            egress = has_egress(*c);
            for (const AstNode* spec : unit.children(*c, "baseContracts")) {
                const AstNode* base = unit.child(*spec, "baseName");
                auto it = base ? by_name.find(base->attr_string("name")) : by_name.end();
                if (it != by_name.end()) {
                    pending.push_back(it->second);
                }
            }
        }
        if (!egress) {
            out.push_back(builtin(unit, *contract, id,
                                  "contract '" + contract->attr_string("name") +
                                      "' accepts ether but has no way to send it out",
                                  Severity::High));
        }
    }

    if (options.mint_check) {
        walk(unit, [&](const AstNode& n, AncestorStack) {
            if (n.type != NodeType::FunctionCall) {
                return;
            }
            const AstNode* callee = unit.child(n, "expression");
            if (is_identifier(callee, "_mint") || is_member(callee, "_mint")) {
                out.push_back(builtin(unit, n, id, "_mint does not check that the receiver can handle tokens; "
                                                   "consider _safeMint",
                                      Severity::Info));
            }
        });
    }
    return out;
}

std::vector<Finding> detect_swe140(const SourceUnit& unit, const ScanOptions&)
{
    std::vector<Finding> out;
    const auto id = detector_ids::kSwe140;
    const UnitFacts facts(unit);
    std::map<NodeId, Cfg> cfgs;
    walk(unit, [&](const AstNode& n, AncestorStack ancestors) {
        if (ether_transfer(unit, facts, n, "transfer")) {
            out.push_back(builtin(unit, n, id,
                                  ".transfer() forwards only 2300 gas; prefer call with a checked result",
                                  Severity::Info));
            return;
        }
        if (!ether_transfer(unit, facts, n, "send") || ancestors.empty()) {
            return;
        }
        const AstNode* parent = ancestors.back();
        if (parent->type == NodeType::ExpressionStatement) {
            out.push_back(builtin(unit, n, id, "return value of .send() is discarded", Severity::High));
            return;
        }
        std::string var;
        if (parent->type == NodeType::VariableDeclarationStatement) {
            auto decls = unit.children(*parent, "declarations");
            if (decls.size() == 1) {
                var = decls[0]->attr_string("name");
            }
        } else if (parent->type == NodeType::Assignment && unit.child(*parent, "rightHandSide") == &n) {
            const AstNode* lhs = unit.child(*parent, "leftHandSide");
            if (lhs && lhs->type == NodeType::Identifier) {
                var = lhs->attr_string("name");
            }
        }
        if (var.empty()) {
            return;
        }
        const AstNode* fn = enclosing(ancestors, {NodeType::FunctionDefinition, NodeType::ModifierDefinition});
        const AstNode* stmt = enclosing_statement(ancestors, n);
        if (!fn || !stmt) {
            return;
        }
        auto it = cfgs.find(fn->id);
        if (it == cfgs.end()) {
            it = cfgs.emplace(fn->id, build_cfg(unit, *fn)).first;
        }
        auto block = it->second.block_of(stmt->id);
        if (block && !uses_identifier_in_condition(unit, it->second, var, *block)) {
            out.push_back(builtin(unit, n, id, "result of .send() stored in '" + var + "' is never checked",
                                  Severity::High));
        }
    });
    return out;
}

void register_builtins(Registry& registry)
{
    auto add = [&](std::string_view id, DetectFn fn, std::string description) {
        DetectorDescriptor d;
        d.detector_id = std::string(id);
        d.swe_id = swe_of(id);
        d.origin = Origin::Builtin;
        d.description = std::move(description);
        d.run = std::move(fn);
        registry.add(std::move(d));
    };
    add(detector_ids::kSwe161, detect_swe161, "direct writes to an array's length member");
    add(detector_ids::kSwe134, detect_swe134, "literal gas amounts and fixed-stipend ether transfers");
    add(detector_ids::kSwe114, detect_swe114, "ERC-20 approve without a reset-to-zero guard");
    add(detector_ids::kSwe138, detect_swe138, "payable contracts with no ether egress; _mint usage");
    add(detector_ids::kSwe140, detect_swe140, "unchecked send results and transfer usage");
}

Registry builtin_registry()
{
    Registry r;
    register_builtins(r);
    return r;
}

nlohmann::ordered_json finding_to_json(const Finding& f)
{
    nlohmann::ordered_json j;
    j["swe_id"] = f.swe_id;
    j["detector_id"] = f.detector_id;
    j["origin"] = origin_name(f.origin);
    j["file_id"] = f.file_id;
    j["span"] = {{"offset", f.span.offset}, {"length", f.span.length}, {"line", f.line}, {"column", f.column}};
    j["message"] = f.message;
    j["severity"] = severity_name(f.severity);
    return j;
}

nlohmann::ordered_json findings_to_json(const std::vector<Finding>& findings)
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : findings) {
        arr.push_back(finding_to_json(f));
    }
    return arr;
}

std::string format_findings_text(const std::vector<Finding>& findings)
{
    std::ostringstream out;
    for (const auto& f : findings) {
        out << f.file_id << ":" << f.line << ":" << f.column << ": " << severity_name(f.severity) << " ["
            << f.swe_id << "/" << f.detector_id << "] " << f.message << "\n";
    }
    return out.str();
}

} // namespace solsentry
