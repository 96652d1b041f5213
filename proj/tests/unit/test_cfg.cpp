// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "solsentry/cfg.hpp"
#include "solsentry/corpus.hpp"
#include "solsentry/parser.hpp"
#include "test_support.hpp"

using namespace solsentry;
namespace st = solsentry::testing;

namespace {

struct Built {
    SourceUnit unit;
    const AstNode* fn = nullptr;
    Cfg cfg;
};

Built build_first(const std::string& body_src, const std::string& params = "uint256 x")
{
    Built b;
    b.unit = parse_source("contract C { function f(" + params + ") public " + body_src + " }", "c.sol");
    for (const auto& n : b.unit.nodes()) {
        if (n.type == NodeType::FunctionDefinition) {
            b.fn = &n;
            break;
        }
    }
    b.cfg = build_cfg(b.unit, *b.fn);
    return b;
}

std::size_t edge_count(const Cfg& cfg, bool skip_failure = true)
{
    std::size_t n = 0;
    for (const auto& b : cfg.blocks) {
        for (const auto& e : b.successors) {
            if (skip_failure && cfg.blocks[e.target].failure_exit) continue;
            ++n;
        }
    }
    return n;
}

bool has_edge(const Cfg& cfg, std::size_t from, std::size_t to, EdgeKind kind)
{
    const auto& s = cfg.blocks.at(from).successors;
    return std::find(s.begin(), s.end(), Edge{to, kind}) != s.end();
}

// Structural invariants every CFG must satisfy.
void check_invariants(const SourceUnit& unit, const AstNode& fn, const Cfg& cfg, const std::string& where)
{
    SCOPED_TRACE(where);
    EXPECT_TRUE(cfg.predecessors(cfg.entry).empty());
    auto live = reachable(cfg, cfg.entry);
    for (const auto& b : cfg.blocks) {
        EXPECT_EQ(b.dead, !live.contains(b.index)) << "block " << b.index;
        for (const auto& e : b.successors) EXPECT_LT(e.target, cfg.blocks.size());
        if (cfg.exits.contains(b.index)) {
            EXPECT_TRUE(b.successors.empty()) << "exit block " << b.index << " has successors";
        } else {
            EXPECT_FALSE(b.successors.empty()) << "non-exit block " << b.index << " has no successors";
        }
        for (std::size_t i = 0; i + 1 < b.statements.size(); ++i) {
            const AstNode& s = unit.node(b.statements[i]);
            EXPECT_NE(s.type, NodeType::IfStatement) << "branch point inside block " << b.index;
            EXPECT_NE(s.type, NodeType::Return);
            EXPECT_FALSE(is_call_statement(unit, s, "require")) << "require not ending block " << b.index;
            EXPECT_FALSE(is_call_statement(unit, s, "revert"));
        }
        if (!b.statements.empty() && is_call_statement(unit, unit.node(b.statements.back()), "require")) {
            bool to_failure = false;
            for (const auto& e : b.successors) {
                to_failure |= e.kind == EdgeKind::Exception && cfg.blocks[e.target].failure_exit;
            }
            EXPECT_TRUE(to_failure) << "require without exception edge in block " << b.index;
        }
    }
    std::vector<NodeId> in_blocks;
    for (const auto& b : cfg.blocks) in_blocks.insert(in_blocks.end(), b.statements.begin(), b.statements.end());
    auto expected = body_statements(unit, fn);
    std::sort(in_blocks.begin(), in_blocks.end());
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(in_blocks, expected) << "statement conservation";
    for (std::size_t b : live) EXPECT_TRUE(dominates(cfg, cfg.entry, b));
    EXPECT_EQ(build_cfg(unit, fn), cfg) << "determinism";
}

// Random statement bodies over the constructs the CFG distinguishes.
class BodyGen {
public:
    explicit BodyGen(std::uint64_t seed) : rng_(seed) {}

    std::string body() { return "{ " + stmts(0, false) + " }"; }

private:
    std::string stmts(int depth, bool in_loop)
    {
        std::string out;
        int n = pick(0, 4);
        for (int i = 0; i < n; ++i) out += stmt(depth, in_loop) + " ";
        return out;
    }

    std::string stmt(int depth, bool in_loop)
    {
        int top = depth >= 3 ? 5 : 10;
        switch (pick(0, top)) {
        case 0: return "x = x + 1;";
        case 1: return "uint256 y" + std::to_string(counter_++) + " = x;";
        case 2: return "require(x > " + std::to_string(pick(0, 9)) + ");";
        case 3: return pick(0, 3) == 0 ? "revert();" : "emit E(x);";
        case 4: return pick(0, 3) == 0 ? "return;" : "x -= 1;";
        case 5: return in_loop ? (pick(0, 1) ? "break;" : "continue;") : "x++;";
        case 6:
        case 7: {
            std::string s = "if (x < " + std::to_string(pick(0, 9)) + ") { " + stmts(depth + 1, in_loop) + "}";
            if (pick(0, 1)) s += " else { " + stmts(depth + 1, in_loop) + "}";
            return s;
        }
        case 8: return "while (x > 3) { " + stmts(depth + 1, true) + "}";
        case 9: return "for (uint256 i = 0; i < x; i++) { " + stmts(depth + 1, true) + "}";
        default: return "if (x == 0) x = 2; else x = 3;";
        }
    }

    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    std::mt19937_64 rng_;
    int counter_ = 0;
};

} // namespace

TEST(Cfg, ReturnOnly)
{
    auto b = build_first("{ return; }");
    EXPECT_EQ(b.cfg.blocks.size(), 1u);
    EXPECT_EQ(edge_count(b.cfg), 0u);
    EXPECT_EQ(b.cfg.blocks[0].terminator, Terminator::Return);
    EXPECT_EQ(reachable(b.cfg, 0), (std::set<std::size_t>{0}));
}

TEST(Cfg, IfElseDiamond)
{
    auto b = build_first("{ if (x > 0) { x = 1; } else { x = 2; } x = 3; }");
    ASSERT_EQ(b.cfg.blocks.size(), 4u);
    EXPECT_EQ(edge_count(b.cfg), 4u);
    EXPECT_TRUE(has_edge(b.cfg, 0, 1, EdgeKind::TrueBranch));
    EXPECT_TRUE(has_edge(b.cfg, 0, 2, EdgeKind::FalseBranch));
    EXPECT_TRUE(has_edge(b.cfg, 1, 3, EdgeKind::Fallthrough));
    EXPECT_TRUE(has_edge(b.cfg, 2, 3, EdgeKind::Fallthrough));
    EXPECT_EQ(reachable(b.cfg, 1), (std::set<std::size_t>{1, 3}));
    EXPECT_EQ(reachable(b.cfg, 3), (std::set<std::size_t>{3}));
    EXPECT_EQ(b.cfg.exits, (std::set<std::size_t>{3}));
    EXPECT_TRUE(dominates(b.cfg, 0, 3));
    EXPECT_FALSE(dominates(b.cfg, 1, 3));
    check_invariants(b.unit, *b.fn, b.cfg, "diamond");
}

TEST(Cfg, WhileTrueHasLoopBack)
{
    auto b = build_first("{ while (true) {} }");
    bool loop_back = false;
    for (const auto& blk : b.cfg.blocks) {
        for (const auto& e : blk.successors) {
            if (e.kind == EdgeKind::LoopBack) {
                loop_back = true;
                ASSERT_FALSE(b.cfg.blocks[e.target].statements.empty());
                EXPECT_EQ(b.unit.node(b.cfg.blocks[e.target].statements.front()).type, NodeType::WhileStatement);
            }
        }
    }
    EXPECT_TRUE(loop_back);
    check_invariants(b.unit, *b.fn, b.cfg, "while");
}

TEST(Cfg, RequireSplitsToFailureExit)
{
    auto b = build_first("{ require(x > 0); x = 1; }");
    ASSERT_EQ(b.cfg.blocks.size(), 3u);
    EXPECT_EQ(b.cfg.blocks[0].terminator, Terminator::RequireFailEdge);
    EXPECT_TRUE(has_edge(b.cfg, 0, 1, EdgeKind::Fallthrough));
    EXPECT_TRUE(has_edge(b.cfg, 0, 2, EdgeKind::Exception));
    EXPECT_TRUE(b.cfg.blocks[2].failure_exit);
    EXPECT_EQ(b.cfg.blocks[2].terminator, Terminator::Revert);
    check_invariants(b.unit, *b.fn, b.cfg, "require");
}

TEST(Cfg, CodeAfterReturnIsDead)
{
    auto b = build_first("{ return; x = 1; }");
    ASSERT_EQ(b.cfg.blocks.size(), 2u);
    EXPECT_TRUE(b.cfg.blocks[1].dead);
    check_invariants(b.unit, *b.fn, b.cfg, "dead");
}

TEST(Cfg, NoBodyThrows)
{
    auto u = parse_source("interface I { function f() external; }", "i.sol");
    for (const auto& n : u.nodes()) {
        if (n.type == NodeType::FunctionDefinition) EXPECT_THROW(build_cfg(u, n), NoBody);
    }
}

TEST(Cfg, IdentifierUseInLaterCondition)
{
    auto checked = build_first("{ bool ok = a.send(1); require(ok); }", "address payable a");
    EXPECT_TRUE(uses_identifier_in_condition(checked.unit, checked.cfg, "ok", checked.cfg.entry));
    EXPECT_FALSE(uses_identifier_in_condition(checked.unit, checked.cfg, "missing", checked.cfg.entry));
    auto unchecked = build_first("{ bool ok = a.send(1); }", "address payable a");
    EXPECT_FALSE(uses_identifier_in_condition(unchecked.unit, unchecked.cfg, "ok", unchecked.cfg.entry));
    auto in_if = build_first("{ bool ok = a.send(1); if (!ok) { revert(); } }", "address payable a");
    EXPECT_TRUE(uses_identifier_in_condition(in_if.unit, in_if.cfg, "ok", in_if.cfg.entry));
}

TEST(Cfg, DotOutputNamesEveryBlock)
{
    auto b = build_first("{ if (x > 0) { x = 1; } }");
    const std::string dot = to_dot(b.unit, b.cfg);
    for (const auto& blk : b.cfg.blocks) {
        EXPECT_NE(dot.find("b" + std::to_string(blk.index) + " [label="), std::string::npos);
    }
    EXPECT_NE(dot.find("true-branch"), std::string::npos);
}

TEST(CfgProperty, InvariantsOnRandomBodies)
{
    for (std::uint64_t seed = 1; seed <= 400; ++seed) {
        BodyGen gen(seed);
        const std::string body = gen.body();
        auto unit = parse_source("contract C { event E(uint256 v); function f(uint256 x) public " + body + " }", "g.sol");
        for (const auto& n : unit.nodes()) {
            if (n.type == NodeType::FunctionDefinition) {
                check_invariants(unit, n, build_cfg(unit, n), "seed " + std::to_string(seed) + ": " + body);
            }
        }
    }
}

TEST(CfgProperty, InvariantsOnCorpusFunctions)
{
    for (const auto& inst : corpus::load_corpus(st::corpus_dir())) {
        auto unit = parse_source(inst.source, inst.instance_id);
        for (const auto& n : unit.nodes()) {
            if ((n.type == NodeType::FunctionDefinition || n.type == NodeType::ModifierDefinition) && unit.child(n, "body")) {
                check_invariants(unit, n, build_cfg(unit, n), inst.instance_id);
            }
        }
    }
}
