// SPDX-License-Identifier: Apache-2.0
#include "solsentry/ast.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <utility>

#include "solsentry/errors.hpp"

namespace solsentry {

namespace {
std::string quote_found(const std::string& f)
{
    if (f == "end of input" || f == "newline" || f == "invalid byte sequence") return f;
    return "'" + f + "'";
}
} // namespace

SyntaxError::SyntaxError(std::size_t l, std::size_t c, std::string exp, std::string fnd)
    : Error("syntax error at " + std::to_string(l) + ":" + std::to_string(c) + ": expected " + exp +
            ", found " + quote_found(fnd)),
      line(l), column(c), expected(std::move(exp)), found(std::move(fnd))
{
}

UnsupportedConstruct::UnsupportedConstruct(std::size_t l, std::size_t c, std::string what)
    : Error("unsupported construct at " + std::to_string(l) + ":" + std::to_string(c) + ": " + what),
      line(l), column(c), construct(std::move(what))
{
}

MalformedAst::MalformedAst(std::string p, std::string r)
    : Error("malformed AST at " + p + ": " + r), path(std::move(p)), reason(std::move(r))
{
}

PrintUnsupported::PrintUnsupported(std::string type)
    : Error("cannot print opaque node of type " + type), node_type(std::move(type))
{
}

namespace {

struct TypeInfo {
    NodeType type;
    std::string_view name;
    std::vector<SlotSchema> slots;
};

// clang-format off
const std::vector<TypeInfo>& types()
{
    static const std::vector<TypeInfo> kTypes{
    {NodeType::SourceUnit, "SourceUnit", {{"nodes", true}}},
    {NodeType::PragmaDirective, "PragmaDirective", {}},
    {NodeType::ImportDirective, "ImportDirective", {}},
    {NodeType::ContractDefinition, "ContractDefinition", {{"baseContracts", true}, {"nodes", true}}},
    {NodeType::InheritanceSpecifier, "InheritanceSpecifier", {{"baseName", false}, {"arguments", true}}},
    {NodeType::FunctionDefinition, "FunctionDefinition",
        {{"parameters", false}, {"modifiers", true}, {"returnParameters", false}, {"body", false}}},
    {NodeType::ModifierDefinition, "ModifierDefinition", {{"parameters", false}, {"body", false}}},
    {NodeType::ModifierInvocation, "ModifierInvocation", {{"modifierName", false}, {"arguments", true}}},
    {NodeType::EventDefinition, "EventDefinition", {{"parameters", false}}},
    {NodeType::ParameterList, "ParameterList", {{"parameters", true}}},
    {NodeType::VariableDeclaration, "VariableDeclaration", {{"typeName", false}, {"value", false}}},
    {NodeType::Block, "Block", {{"statements", true}}},
    {NodeType::ExpressionStatement, "ExpressionStatement", {{"expression", false}}},
    {NodeType::VariableDeclarationStatement, "VariableDeclarationStatement",
        {{"declarations", true}, {"initialValue", false}}},
    {NodeType::IfStatement, "IfStatement", {{"condition", false}, {"trueBody", false}, {"falseBody", false}}},
    {NodeType::WhileStatement, "WhileStatement", {{"condition", false}, {"body", false}}},
    {NodeType::ForStatement, "ForStatement",
        {{"initializationExpression", false}, {"condition", false}, {"loopExpression", false}, {"body", false}}},
    {NodeType::Return, "Return", {{"expression", false}}},
    {NodeType::EmitStatement, "EmitStatement", {{"eventCall", false}}},
    {NodeType::Break, "Break", {}},
    {NodeType::Continue, "Continue", {}},
    {NodeType::PlaceholderStatement, "PlaceholderStatement", {}},
    {NodeType::FunctionCall, "FunctionCall", {{"expression", false}, {"arguments", true}}},
    {NodeType::FunctionCallOptions, "FunctionCallOptions", {{"expression", false}, {"options", true}}},
    {NodeType::MemberAccess, "MemberAccess", {{"expression", false}}},
    {NodeType::IndexAccess, "IndexAccess", {{"baseExpression", false}, {"indexExpression", false}}},
    {NodeType::Identifier, "Identifier", {}},
    {NodeType::Literal, "Literal", {}},
    {NodeType::Assignment, "Assignment", {{"leftHandSide", false}, {"rightHandSide", false}}},
    {NodeType::UnaryOperation, "UnaryOperation", {{"subExpression", false}}},
    {NodeType::BinaryOperation, "BinaryOperation", {{"leftExpression", false}, {"rightExpression", false}}},
    {NodeType::Conditional, "Conditional",
        {{"condition", false}, {"trueExpression", false}, {"falseExpression", false}}},
    {NodeType::TupleExpression, "TupleExpression", {{"components", true}}},
    {NodeType::ElementaryTypeNameExpression, "ElementaryTypeNameExpression", {{"typeName", false}}},
    {NodeType::NewExpression, "NewExpression", {{"typeName", false}}},
    {NodeType::ElementaryTypeName, "ElementaryTypeName", {}},
    {NodeType::UserDefinedTypeName, "UserDefinedTypeName", {}},
    {NodeType::Mapping, "Mapping", {{"keyType", false}, {"valueType", false}}},
    {NodeType::ArrayTypeName, "ArrayTypeName", {{"baseType", false}, {"length", false}}},
    {NodeType::Opaque, "Opaque", {}},
    };
    return kTypes;
}
// clang-format on

const TypeInfo& info(NodeType t)
{
    return types()[static_cast<std::size_t>(t)];
}

} // namespace

std::string_view node_type_name(NodeType type)
{
    return info(type).name;
}

std::optional<NodeType> node_type_from_name(std::string_view name)
{
    for (const auto& t : types()) {
        if (t.name == name && t.type != NodeType::Opaque) {
            return t.type;
        }
    }
    return std::nullopt;
}

bool is_statement(NodeType type)
{
    switch (type) {
    case NodeType::Block:
    case NodeType::ExpressionStatement:
    case NodeType::VariableDeclarationStatement:
    case NodeType::IfStatement:
    case NodeType::WhileStatement:
    case NodeType::ForStatement:
    case NodeType::Return:
    case NodeType::EmitStatement:
    case NodeType::Break:
    case NodeType::Continue:
    case NodeType::PlaceholderStatement:
        return true;
    default:
        return false;
    }
}

std::span<const SlotSchema> slot_schema(NodeType type)
{
    const auto& slots = info(type).slots;
    return {slots.data(), slots.size()};
}

bool Span::overlaps(const Span& other) const
{
    if (length == 0 || other.length == 0) {
        return offset >= other.offset && offset <= other.end();
    }
    return offset < other.end() && other.offset < end();
}

bool Span::contains(const Span& other) const
{
    return other.offset >= offset && other.end() <= end();
}

const Slot* AstNode::slot(std::string_view name) const
{
    for (const auto& s : slots) {
        if (s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

std::string AstNode::attr_string(std::string_view key) const
{
    auto it = attributes.find(key);
    if (it == attributes.end() || !it->is_string()) {
        return {};
    }
    return it->get<std::string>();
}

bool AstNode::attr_bool(std::string_view key) const
{
    auto it = attributes.find(key);
    return it != attributes.end() && it->is_boolean() && it->get<bool>();
}

NodeDraft::NodeDraft(NodeType t) : type(t), type_name(node_type_name(t)) {}

NodeDraft::NodeDraft(NodeType t, std::string opaque_name) : type(t), type_name(std::move(opaque_name)) {}

NodeDraft& NodeDraft::attr(const std::string& key, nlohmann::json value)
{
    attributes[key] = std::move(value);
    return *this;
}

NodeDraft& NodeDraft::child(const std::string& slot, std::unique_ptr<NodeDraft> node)
{
    if (!node) {
        return *this;
    }
    DraftSlot s;
    s.name = slot;
    s.is_list = false;
    s.nodes.push_back(std::move(node));
    slots.push_back(std::move(s));
    return *this;
}

NodeDraft& NodeDraft::list(const std::string& slot, std::vector<std::unique_ptr<NodeDraft>> nodes)
{
    DraftSlot s;
    s.name = slot;
    s.is_list = true;
    s.nodes = std::move(nodes);
    slots.push_back(std::move(s));
    return *this;
}

namespace {

int schema_rank(NodeType type, const std::string& slot)
{
    auto schema = slot_schema(type);
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].name == slot) {
            return static_cast<int>(i);
        }
    }
    return static_cast<int>(schema.size());
}

void flatten(NodeDraft& draft, NodeId parent, std::vector<AstNode>& out)
{
    // Schema slots first in schema order, then any extra slots alphabetically.
    std::stable_sort(draft.slots.begin(), draft.slots.end(),
                     [&](const NodeDraft::DraftSlot& a, const NodeDraft::DraftSlot& b) {
                         int ra = schema_rank(draft.type, a.name);
                         int rb = schema_rank(draft.type, b.name);
                         if (ra != rb) {
                             return ra < rb;
                         }
                         return a.name < b.name;
                     });

    const auto id = static_cast<NodeId>(out.size());
    out.emplace_back();
    {
        AstNode& n = out.back();
        n.id = id;
        n.type = draft.type;
        n.type_name = draft.type_name;
        n.span = draft.span;
        n.attributes = std::move(draft.attributes);
        n.parent = parent;
    }
    std::vector<Slot> slots;
    for (auto& ds : draft.slots) {
        Slot s;
        s.name = ds.name;
        s.is_list = ds.is_list;
        for (auto& child : ds.nodes) {
            if (!child) {
                s.nodes.push_back(kNoNode);
                continue;
            }
            s.nodes.push_back(static_cast<NodeId>(out.size()));
            flatten(*child, id, out);
        }
        slots.push_back(std::move(s));
    }
    out[static_cast<std::size_t>(id)].slots = std::move(slots);
}

} // namespace

SourceUnit SourceUnit::freeze(std::unique_ptr<NodeDraft> root, std::string file_id, std::string raw_text)
{
    SourceUnit unit;
    unit.file_id_ = std::move(file_id);
    unit.raw_text_ = std::move(raw_text);
    if (root) {
        flatten(*root, kNoNode, unit.nodes_);
    }
    unit.line_starts_.push_back(0);
    for (std::size_t i = 0; i < unit.raw_text_.size(); ++i) {
        if (unit.raw_text_[i] == '\n') {
            unit.line_starts_.push_back(static_cast<std::uint32_t>(i + 1));
        }
    }
    return unit;
}

const AstNode* SourceUnit::child(const AstNode& n, std::string_view slot) const
{
    const Slot* s = n.slot(slot);
    if (!s || s->nodes.empty() || s->nodes.front() == kNoNode) {
        return nullptr;
    }
    return &node(s->nodes.front());
}

std::vector<const AstNode*> SourceUnit::children(const AstNode& n, std::string_view slot) const
{
    std::vector<const AstNode*> out;
    if (const Slot* s = n.slot(slot)) {
        for (NodeId id : s->nodes) {
            if (id != kNoNode) {
                out.push_back(&node(id));
            }
        }
    }
    return out;
}

std::vector<const AstNode*> SourceUnit::all_children(const AstNode& n) const
{
    std::vector<const AstNode*> out;
    for (const auto& s : n.slots) {
        for (NodeId id : s.nodes) {
            if (id != kNoNode) {
                out.push_back(&node(id));
            }
        }
    }
    return out;
}

const AstNode* SourceUnit::parent(const AstNode& n) const
{
    return n.parent == kNoNode ? nullptr : &node(n.parent);
}

std::vector<const AstNode*> SourceUnit::contracts() const
{
    std::vector<const AstNode*> out;
    if (empty()) {
        return out;
    }
    for (const AstNode* n : children(root(), "nodes")) {
        if (n->is(NodeType::ContractDefinition)) {
            out.push_back(n);
        }
    }
    return out;
}

std::vector<PragmaInfo> SourceUnit::pragmas() const
{
    std::vector<PragmaInfo> out;
    if (empty()) {
        return out;
    }
    for (const AstNode* n : children(root(), "nodes")) {
        if (!n->is(NodeType::PragmaDirective)) {
            continue;
        }
        const auto& literals = n->attributes.value("literals", nlohmann::json::array());
        PragmaInfo p;
        for (std::size_t i = 0; i < literals.size(); ++i) {
            if (!literals[i].is_string()) {
                continue;
            }
            if (i == 0) {
                p.name = literals[i].get<std::string>();
            } else {
                // solc splits the constraint into fragments; ours is one literal.
                p.constraint_text += literals[i].get<std::string>();
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::optional<VersionConstraint> SourceUnit::solidity_constraint() const
{
    std::optional<VersionConstraint> combined;
    for (const auto& p : pragmas()) {
        if (p.name != "solidity") {
            continue;
        }
        auto c = VersionConstraint::parse(p.constraint_text);
        if (!c) {
            continue;
        }
        combined = combined ? combined->conjoin(*c) : *c;
    }
    return combined;
}

std::string_view SourceUnit::text_of(const AstNode& n) const
{
    if (n.span.end() > raw_text_.size()) {
        return {};
    }
    return std::string_view(raw_text_).substr(n.span.offset, n.span.length);
}

std::pair<std::size_t, std::size_t> SourceUnit::line_column(std::uint32_t offset) const
{
    if (line_starts_.empty()) {
        return {1, offset + 1};
    }
    auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
    std::size_t line = static_cast<std::size_t>(it - line_starts_.begin());
    std::uint32_t start = line_starts_[line - 1];
    return {line, offset - start + 1};
}

namespace {

void walk_from(const SourceUnit& unit, const AstNode& n, std::vector<const AstNode*>& stack,
               const Visitor& visitor)
{
    visitor(n, AncestorStack(stack.data(), stack.size()));
    stack.push_back(&n);
    for (const auto& s : n.slots) {
        for (NodeId id : s.nodes) {
            if (id != kNoNode) {
                walk_from(unit, unit.node(id), stack, visitor);
            }
        }
    }
    stack.pop_back();
}

std::string describe(const AstNode& n)
{
    return std::string(n.type_name) + "#" + std::to_string(n.id);
}

std::string diff_nodes(const SourceUnit& ua, const AstNode& a, const SourceUnit& ub, const AstNode& b,
                       bool spans)
{
    if (a.type != b.type || a.type_name != b.type_name) {
        return describe(a) + " vs " + describe(b) + ": node type differs";
    }
    if (a.attributes != b.attributes) {
        return describe(a) + ": attributes differ: " + a.attributes.dump() + " vs " + b.attributes.dump();
    }
    if (spans && a.span != b.span) {
        return describe(a) + ": span differs";
    }
    if (a.slots.size() != b.slots.size()) {
        return describe(a) + ": slot count differs";
    }
    for (std::size_t i = 0; i < a.slots.size(); ++i) {
        const Slot& sa = a.slots[i];
        const Slot& sb = b.slots[i];
        if (sa.name != sb.name || sa.is_list != sb.is_list || sa.nodes.size() != sb.nodes.size()) {
            return describe(a) + ": slot '" + sa.name + "' shape differs";
        }
        for (std::size_t k = 0; k < sa.nodes.size(); ++k) {
            if ((sa.nodes[k] == kNoNode) != (sb.nodes[k] == kNoNode)) {
                return describe(a) + ": slot '" + sa.name + "' null entry differs";
            }
            if (sa.nodes[k] == kNoNode) {
                continue;
            }
            auto d = diff_nodes(ua, ua.node(sa.nodes[k]), ub, ub.node(sb.nodes[k]), spans);
            if (!d.empty()) {
                return d;
            }
        }
    }
    return {};
}

} // namespace

void walk(const SourceUnit& unit, const Visitor& visitor)
{
    if (unit.empty()) {
        return;
    }
    walk_subtree(unit, unit.root(), visitor);
}

void walk_subtree(const SourceUnit& unit, const AstNode& start, const Visitor& visitor)
{
    std::vector<const AstNode*> stack;
    for (NodeId p = start.parent; p != kNoNode; p = unit.node(p).parent) {
        stack.push_back(&unit.node(p));
    }
    std::reverse(stack.begin(), stack.end());
    walk_from(unit, start, stack, visitor);
}

std::string first_difference(const SourceUnit& a, const SourceUnit& b, bool compare_spans)
{
    if (a.empty() || b.empty()) {
        return a.empty() == b.empty() ? std::string{} : std::string("one tree is empty");
    }
    return diff_nodes(a, a.root(), b, b.root(), compare_spans);
}

bool structurally_equal(const SourceUnit& a, const SourceUnit& b, bool compare_spans)
{
    return first_difference(a, b, compare_spans).empty();
}

} // namespace solsentry
