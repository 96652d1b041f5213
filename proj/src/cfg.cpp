// SPDX-License-Identifier: Apache-2.0
#include "solsentry/cfg.hpp"

#include <algorithm>
#include <sstream>

#include "solsentry/errors.hpp"

namespace solsentry {

std::string_view edge_kind_name(EdgeKind kind)
{
    switch (kind) {
    case EdgeKind::Fallthrough: return "fallthrough";
    case EdgeKind::TrueBranch: return "true-branch";
    case EdgeKind::FalseBranch: return "false-branch";
    case EdgeKind::LoopBack: return "loop-back";
    case EdgeKind::Exception: return "exception";
    }
    return "?";
}

std::string_view terminator_name(Terminator t)
{
    switch (t) {
    case Terminator::Return: return "return";
    case Terminator::Revert: return "revert";
    case Terminator::RequireFailEdge: return "require-fail-edge";
    case Terminator::ImplicitFallthrough: return "implicit-fallthrough";
    case Terminator::EndOfFunction: return "end-of-function";
    }
    return "?";
}

std::vector<std::size_t> Cfg::predecessors(std::size_t block) const
{
    std::vector<std::size_t> out;
    for (const auto& b : blocks) {
        for (const auto& e : b.successors) {
            if (e.target == block) {
                out.push_back(b.index);
                break;
            }
        }
    }
    return out;
}

std::optional<std::size_t> Cfg::block_of(NodeId statement) const
{
    for (const auto& b : blocks) {
        if (std::find(b.statements.begin(), b.statements.end(), statement) != b.statements.end()) {
            return b.index;
        }
    }
    return std::nullopt;
}

bool is_call_statement(const SourceUnit& unit, const AstNode& stmt, std::string_view callee)
{
    if (stmt.type != NodeType::ExpressionStatement) {
        return false;
    }
    const AstNode* call = unit.child(stmt, "expression");
    if (!call || call->type != NodeType::FunctionCall) {
        return false;
    }
    const AstNode* fn = unit.child(*call, "expression");
    return fn && fn->type == NodeType::Identifier && fn->attr_string("name") == callee;
}

namespace {

class Builder {
public:
    Builder(const SourceUnit& unit, NodeId fn) : u_(unit) { cfg_.function_id = fn; }

    Cfg run(const AstNode& body)
    {
        cur_ = new_block();
        statement(body);
        if (cur_) {
            cfg_.blocks[*cur_].terminator = Terminator::EndOfFunction;
            cfg_.exits.insert(*cur_);
        }
        auto live = reachable(cfg_, cfg_.entry);
        for (auto& b : cfg_.blocks) {
            b.dead = !live.contains(b.index);
        }
        return std::move(cfg_);
    }

private:
    struct Loop {
        std::size_t continue_target;
        std::size_t break_target;
    };

    std::size_t new_block()
    {
        BasicBlock b;
        b.index = cfg_.blocks.size();
        cfg_.blocks.push_back(std::move(b));
        return cfg_.blocks.back().index;
    }

    std::size_t current()
    {
        if (!cur_) {
            cur_ = new_block(); // unreachable code after return/revert/break
        }
        return *cur_;
    }

    void edge(std::size_t from, std::size_t to, EdgeKind kind)
    {
        cfg_.blocks[from].successors.push_back({to, kind});
    }

    std::size_t failure_exit()
    {
        if (!failure_) {
            failure_ = new_block();
            auto& b = cfg_.blocks[*failure_];
            b.terminator = Terminator::Revert;
            b.failure_exit = true;
            cfg_.exits.insert(*failure_);
        }
        return *failure_;
    }

    void push(std::size_t block, const AstNode& s) { cfg_.blocks[block].statements.push_back(s.id); }

    void statement(const AstNode& s)
    {
        switch (s.type) {
        case NodeType::Block:
            for (const AstNode* c : u_.children(s, "statements")) {
                statement(*c);
            }
            return;
        case NodeType::IfStatement: {
            std::size_t cond = current();
            push(cond, s);
            std::size_t then_block = new_block();
            edge(cond, then_block, EdgeKind::TrueBranch);
            cur_ = then_block;
            statement(*u_.child(s, "trueBody"));
            auto then_end = cur_;
            std::optional<std::size_t> else_end;
            const AstNode* false_body = u_.child(s, "falseBody");
            if (false_body) {
                std::size_t else_block = new_block();
                edge(cond, else_block, EdgeKind::FalseBranch);
                cur_ = else_block;
                statement(*false_body);
                else_end = cur_;
            }
            std::size_t join = new_block();
            if (then_end) {
                edge(*then_end, join, EdgeKind::Fallthrough);
            }
            if (false_body) {
                if (else_end) {
                    edge(*else_end, join, EdgeKind::Fallthrough);
                }
            } else {
                edge(cond, join, EdgeKind::FalseBranch);
            }
            cur_ = join;
            return;
        }
        case NodeType::WhileStatement: {
            std::size_t prev = current();
            std::size_t cond = new_block();
            edge(prev, cond, EdgeKind::Fallthrough);
            push(cond, s);
            std::size_t body = new_block();
            std::size_t after = new_block();
            edge(cond, body, EdgeKind::TrueBranch);
            edge(cond, after, EdgeKind::FalseBranch);
            loops_.push_back({cond, after});
            cur_ = body;
            statement(*u_.child(s, "body"));
            if (cur_) {
                edge(*cur_, cond, EdgeKind::LoopBack);
            }
            loops_.pop_back();
            cur_ = after;
            return;
        }
        case NodeType::ForStatement: {
            if (const AstNode* init = u_.child(s, "initializationExpression")) {
                statement(*init);
            }
            std::size_t prev = current();
            std::size_t cond = new_block();
            edge(prev, cond, EdgeKind::Fallthrough);
            push(cond, s);
            std::size_t body = new_block();
            std::size_t latch = new_block();
            std::size_t after = new_block();
            edge(cond, body, EdgeKind::TrueBranch);
            if (u_.child(s, "condition")) {
                edge(cond, after, EdgeKind::FalseBranch);
            }
            loops_.push_back({latch, after});
            cur_ = body;
            statement(*u_.child(s, "body"));
            if (cur_) {
                edge(*cur_, latch, EdgeKind::Fallthrough);
            }
            loops_.pop_back();
            if (const AstNode* loop = u_.child(s, "loopExpression")) {
                push(latch, *loop);
            }
            edge(latch, cond, EdgeKind::LoopBack);
            cur_ = after;
            return;
        }
        case NodeType::Return: {
            std::size_t b = current();
            push(b, s);
            cfg_.blocks[b].terminator = Terminator::Return;
            cfg_.exits.insert(b);
            cur_.reset();
            return;
        }
        case NodeType::Break:
        case NodeType::Continue: {
            std::size_t b = current();
            push(b, s);
            if (loops_.empty()) {
                cfg_.blocks[b].terminator = Terminator::EndOfFunction;
                cfg_.exits.insert(b);
            } else if (s.type == NodeType::Break) {
                edge(b, loops_.back().break_target, EdgeKind::Fallthrough);
            } else {
                edge(b, loops_.back().continue_target,
                     loops_.back().continue_target == loops_.back().break_target ? EdgeKind::Fallthrough
                                                                                 : EdgeKind::LoopBack);
            }
            cur_.reset();
            return;
        }
        case NodeType::ExpressionStatement: {
            std::size_t b = current();
            push(b, s);
            if (is_call_statement(u_, s, "require")) {
                cfg_.blocks[b].terminator = Terminator::RequireFailEdge;
                std::size_t next = new_block();
                edge(b, next, EdgeKind::Fallthrough);
                edge(b, failure_exit(), EdgeKind::Exception);
                cur_ = next;
            } else if (is_call_statement(u_, s, "revert")) {
                cfg_.blocks[b].terminator = Terminator::Revert;
                edge(b, failure_exit(), EdgeKind::Exception);
                cur_.reset();
            }
            return;
        }
        default:
            push(current(), s);
            return;
        }
    }

    const SourceUnit& u_;
    Cfg cfg_;
    std::optional<std::size_t> cur_;
    std::optional<std::size_t> failure_;
    std::vector<Loop> loops_;
};

bool mentions_identifier(const SourceUnit& unit, const AstNode& expr, std::string_view name)
{
    bool found = false;
    walk_subtree(unit, expr, [&](const AstNode& n, AncestorStack) {
        if (n.type == NodeType::Identifier && n.attr_string("name") == name) {
            found = true;
        }
    });
    return found;
}

std::set<std::size_t> reachable_without(const Cfg& cfg, std::size_t from, std::optional<std::size_t> removed)
{
    std::set<std::size_t> seen;
    if (removed && *removed == from) {
        return seen;
    }
    std::vector<std::size_t> stack{from};
    seen.insert(from);
    while (!stack.empty()) {
        std::size_t b = stack.back();
        stack.pop_back();
        for (const auto& e : cfg.blocks.at(b).successors) {
            if (removed && e.target == *removed) {
                continue;
            }
            if (seen.insert(e.target).second) {
                stack.push_back(e.target);
            }
        }
    }
    return seen;
}

} // namespace

Cfg build_cfg(const SourceUnit& unit, const AstNode& function)
{
    if (function.type != NodeType::FunctionDefinition && function.type != NodeType::ModifierDefinition) {
        throw Error("build_cfg expects a function or modifier definition, got " + function.type_name);
    }
    const AstNode* body = unit.child(function, "body");
    if (!body) {
        std::string name = function.attr_string("name");
        throw NoBody("function '" + (name.empty() ? function.attr_string("kind") : name) + "' has no body");
    }
    return Builder(unit, function.id).run(*body);
}

std::set<std::size_t> reachable(const Cfg& cfg, std::size_t from)
{
    return reachable_without(cfg, from, std::nullopt);
}

bool dominates(const Cfg& cfg, std::size_t a, std::size_t b)
{
    if (a == b) {
        return true;
    }
    if (!reachable(cfg, cfg.entry).contains(b)) {
        return false;
    }
    return !reachable_without(cfg, cfg.entry, a).contains(b);
}

bool uses_identifier_in_condition(const SourceUnit& unit, const Cfg& cfg, std::string_view name,
                                  std::size_t after)
{
    for (std::size_t b : reachable(cfg, after)) {
        for (NodeId id : cfg.blocks[b].statements) {
            const AstNode& s = unit.node(id);
            switch (s.type) {
            case NodeType::IfStatement:
            case NodeType::WhileStatement:
            case NodeType::ForStatement:
                if (const AstNode* c = unit.child(s, "condition"); c && mentions_identifier(unit, *c, name)) {
                    return true;
                }
                break;
            case NodeType::ExpressionStatement:
                if (is_call_statement(unit, s, "require")) {
                    for (const AstNode* arg : unit.children(*unit.child(s, "expression"), "arguments")) {
                        if (mentions_identifier(unit, *arg, name)) {
                            return true;
                        }
                    }
                }
                break;
            default:
                break;
            }
        }
    }
    return false;
}

std::vector<NodeId> body_statements(const SourceUnit& unit, const AstNode& function)
{
    std::vector<NodeId> out;
    const AstNode* body = unit.child(function, "body");
    if (!body) {
        return out;
    }
    walk_subtree(unit, *body, [&](const AstNode& n, AncestorStack) {
        if (is_statement(n.type) && n.type != NodeType::Block) {
            out.push_back(n.id);
        }
    });
    return out;
}

std::string to_dot(const SourceUnit& unit, const Cfg& cfg)
{
    std::ostringstream out;
    out << "digraph cfg_" << cfg.function_id << " {\n";
    out << "  node [shape=box, fontname=\"monospace\"];\n";
    for (const auto& b : cfg.blocks) {
        out << "  b" << b.index << " [label=\"B" << b.index;
        if (b.index == cfg.entry) {
            out << " (entry)";
        }
        if (b.failure_exit) {
            out << " (failure exit)";
        }
        if (b.dead) {
            out << " (dead)";
        }
        out << "\\n";
        for (NodeId id : b.statements) {
            const AstNode& s = unit.node(id);
            out << s.type_name << "#" << id << "\\l";
        }
        out << "[" << terminator_name(b.terminator) << "]\"];\n";
    }
    for (const auto& b : cfg.blocks) {
        for (const auto& e : b.successors) {
            out << "  b" << b.index << " -> b" << e.target << " [label=\"" << edge_kind_name(e.kind) << "\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

} // namespace solsentry
