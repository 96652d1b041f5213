// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "solsentry/ast.hpp"

namespace solsentry {

enum class EdgeKind { Fallthrough, TrueBranch, FalseBranch, LoopBack, Exception };
enum class Terminator { Return, Revert, RequireFailEdge, ImplicitFallthrough, EndOfFunction };

std::string_view edge_kind_name(EdgeKind kind);
std::string_view terminator_name(Terminator t);

struct Edge {
    std::size_t target = 0;
    EdgeKind kind = EdgeKind::Fallthrough;
    friend bool operator==(const Edge&, const Edge&) = default;
};

struct BasicBlock {
    std::size_t index = 0;
    /// Statement node ids in execution order. Block containers are not listed;
    /// if/while/for nodes sit at the end of the block that evaluates their
    /// condition.
    std::vector<NodeId> statements;
    std::vector<Edge> successors;
    Terminator terminator = Terminator::ImplicitFallthrough;
    bool dead = false;
    /// The shared failure exit targeted by require/revert exception edges.
    bool failure_exit = false;

    friend bool operator==(const BasicBlock&, const BasicBlock&) = default;
};

struct Cfg {
    NodeId function_id = kNoNode;
    std::vector<BasicBlock> blocks;
    std::size_t entry = 0;
    std::set<std::size_t> exits;

    std::vector<std::size_t> predecessors(std::size_t block) const;
    /// Block holding a statement node, if any.
    std::optional<std::size_t> block_of(NodeId statement) const;

    friend bool operator==(const Cfg&, const Cfg&) = default;
};

/// Builds the control-flow graph of a FunctionDefinition or ModifierDefinition.
/// Throws NoBody when the function is unimplemented.
Cfg build_cfg(const SourceUnit& unit, const AstNode& function);

/// Blocks reachable from `from` over successor edges, `from` included.
std::set<std::size_t> reachable(const Cfg& cfg, std::size_t from);

/// True when every path from entry to `b` passes through `a`.
bool dominates(const Cfg& cfg, std::size_t a, std::size_t b);

/// True when some block reachable from `after` has an if/while/for condition
/// or a require argument mentioning an Identifier called `name`.
bool uses_identifier_in_condition(const SourceUnit& unit, const Cfg& cfg, std::string_view name,
                                  std::size_t after);

/// True for an ExpressionStatement whose expression calls `callee` directly.
bool is_call_statement(const SourceUnit& unit, const AstNode& stmt, std::string_view callee);

/// Statement ids of a function body, excluding Block containers, in pre-order.
std::vector<NodeId> body_statements(const SourceUnit& unit, const AstNode& function);

std::string to_dot(const SourceUnit& unit, const Cfg& cfg);

} // namespace solsentry
