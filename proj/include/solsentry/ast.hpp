// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "solsentry/version.hpp"

namespace solsentry {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

enum class NodeType {
    SourceUnit,
    PragmaDirective,
    ImportDirective,
    ContractDefinition,
    InheritanceSpecifier,
    FunctionDefinition,
    ModifierDefinition,
    ModifierInvocation,
    EventDefinition,
    ParameterList,
    VariableDeclaration,
    Block,
    ExpressionStatement,
    VariableDeclarationStatement,
    IfStatement,
    WhileStatement,
    ForStatement,
    Return,
    EmitStatement,
    Break,
    Continue,
    PlaceholderStatement,
    FunctionCall,
    FunctionCallOptions,
    MemberAccess,
    IndexAccess,
    Identifier,
    Literal,
    Assignment,
    UnaryOperation,
    BinaryOperation,
    Conditional,
    TupleExpression,
    ElementaryTypeNameExpression,
    NewExpression,
    ElementaryTypeName,
    UserDefinedTypeName,
    Mapping,
    ArrayTypeName,
    /// A nodeType outside the supported subset, kept from an external AST.
    Opaque,
};

std::string_view node_type_name(NodeType type);
std::optional<NodeType> node_type_from_name(std::string_view name);

/// True for node types that the CFG treats as statements.
bool is_statement(NodeType type);

/// Named child slots of a known node type, in canonical (pre-order) order.
struct SlotSchema {
    std::string_view name;
    bool is_list;
};
std::span<const SlotSchema> slot_schema(NodeType type);

struct Span {
    std::uint32_t offset = 0;
    std::uint32_t length = 0;

    std::uint32_t end() const { return offset + length; }
    bool overlaps(const Span& other) const;
    bool contains(const Span& other) const;
    friend bool operator==(const Span&, const Span&) = default;
};

struct Slot {
    std::string name;
    bool is_list = false;
    /// Single slots hold exactly one id; list slots may contain kNoNode for empty
    /// tuple positions.
    std::vector<NodeId> nodes;
};

struct AstNode {
    NodeId id = kNoNode;
    NodeType type = NodeType::Opaque;
    std::string type_name;
    Span span;
    nlohmann::json attributes = nlohmann::json::object();
    std::vector<Slot> slots;
    NodeId parent = kNoNode;

    const Slot* slot(std::string_view name) const;
    std::string attr_string(std::string_view key) const;
    bool attr_bool(std::string_view key) const;
    bool is(NodeType t) const { return type == t; }
};

/// Mutable node used while a tree is being built. Ids are assigned when the
/// draft is frozen into a SourceUnit.
struct NodeDraft {
    struct DraftSlot {
        std::string name;
        bool is_list = false;
        std::vector<std::unique_ptr<NodeDraft>> nodes;
    };

    NodeType type = NodeType::Opaque;
    std::string type_name;
    Span span;
    nlohmann::json attributes = nlohmann::json::object();
    std::vector<DraftSlot> slots;

    explicit NodeDraft(NodeType t);
    NodeDraft(NodeType t, std::string opaque_name);

    NodeDraft& attr(const std::string& key, nlohmann::json value);
    NodeDraft& child(const std::string& slot, std::unique_ptr<NodeDraft> node);
    NodeDraft& list(const std::string& slot, std::vector<std::unique_ptr<NodeDraft>> nodes);
};

struct PragmaInfo {
    std::string name;
    std::string constraint_text;
};

/// Immutable parsed file. Nodes live in a flat arena indexed by id; ids are
/// dense and assigned in pre-order, so node 0 is the SourceUnit root.
class SourceUnit {
public:
    SourceUnit() = default;
    static SourceUnit freeze(std::unique_ptr<NodeDraft> root, std::string file_id,
                             std::string raw_text);

    const std::string& file_id() const { return file_id_; }
    const std::string& raw_text() const { return raw_text_; }
    std::size_t size() const { return nodes_.size(); }
    bool empty() const { return nodes_.empty(); }

    const AstNode& root() const { return nodes_.front(); }
    const AstNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::span<const AstNode> nodes() const { return nodes_; }

    const AstNode* child(const AstNode& n, std::string_view slot) const;
    /// Non-null members of a slot, in order.
    std::vector<const AstNode*> children(const AstNode& n, std::string_view slot) const;
    std::vector<const AstNode*> all_children(const AstNode& n) const;
    const AstNode* parent(const AstNode& n) const;

    std::vector<const AstNode*> contracts() const;
    std::vector<PragmaInfo> pragmas() const;
    /// Combined `pragma solidity` constraint, if any.
    std::optional<VersionConstraint> solidity_constraint() const;

    /// Text covered by a node's span (empty when raw text is unavailable).
    std::string_view text_of(const AstNode& n) const;
    /// 1-based line and column of a byte offset in raw_text.
    std::pair<std::size_t, std::size_t> line_column(std::uint32_t offset) const;

private:
    std::string file_id_;
    std::string raw_text_;
    std::vector<AstNode> nodes_;
    std::vector<std::uint32_t> line_starts_;
};

using AncestorStack = std::span<const AstNode* const>;
using Visitor = std::function<void(const AstNode&, AncestorStack)>;

/// Pre-order traversal supplying the ancestors (outermost first) of each node.
void walk(const SourceUnit& unit, const Visitor& visitor);
void walk_subtree(const SourceUnit& unit, const AstNode& start, const Visitor& visitor);

/// Structural equality: node types, attributes and slot shapes. Spans are
/// compared only when requested.
bool structurally_equal(const SourceUnit& a, const SourceUnit& b, bool compare_spans = false);
/// Describes the first structural difference, empty when equal.
std::string first_difference(const SourceUnit& a, const SourceUnit& b, bool compare_spans = false);

} // namespace solsentry
