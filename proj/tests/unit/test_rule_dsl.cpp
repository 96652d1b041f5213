// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <regex>

#include "solsentry/ast_json.hpp"
#include "solsentry/corpus.hpp"
#include "solsentry/detectors.hpp"
#include "solsentry/parser.hpp"
#include "solsentry/rule_dsl.hpp"
#include "solsentry/rule_store.hpp"
#include "rule_oracle.hpp"
#include "test_support.hpp"

using namespace solsentry;
using namespace solsentry::rules;
namespace st = solsentry::testing;
using st::index_json;
using st::ref_eval;
using st::RuleGen;
using nlohmann::json;

namespace {

struct Sample {
    SourceUnit unit;
    json doc;
    std::map<NodeId, const json*> by_id;
};

const std::vector<std::unique_ptr<Sample>>& samples()
{
    static const auto all = [] {
        std::vector<std::unique_ptr<Sample>> out;
        auto instances = corpus::load_corpus(st::corpus_dir());
        for (std::size_t i = 0; i < instances.size(); i += 7) {
            auto s = std::make_unique<Sample>();
            s->unit = parse_source(instances[i].source, instances[i].instance_id);
            s->doc = json::parse(to_json(s->unit));
            index_json(s->doc, s->by_id);
            out.push_back(std::move(s));
        }
        return out;
    }();
    return all;
}

SourceUnit dec_unit()
{
    return parse_source("pragma solidity ^0.5.0; contract A { uint256[] a; function f() public { a.length--; } "
                        "function g(address x) public { x.call(\"\"); } }",
                        "a.sol");
}

const AstNode& node_of(const SourceUnit& u, NodeType t, std::size_t nth = 0)
{
    for (const auto& n : u.nodes()) {
        if (n.type == t && nth-- == 0) return n;
    }
    throw std::runtime_error("node not found");
}

} // namespace

TEST(RuleParse, SpecExamples)
{
    auto r = parse_condition(R"(node.nodeType == "MemberAccess" && node.memberName == "length")");
    ASSERT_EQ(r.kind, RuleExpr::Kind::And);
    ASSERT_EQ(r.operands.size(), 2u);
    EXPECT_EQ(r.operands[0].kind, RuleExpr::Kind::Compare);
    EXPECT_THROW(parse_condition("node"), RuleSyntaxError);
    auto e = parse_condition("!(exists(node.arguments[0]))");
    EXPECT_EQ(e.kind, RuleExpr::Kind::Not);
    EXPECT_EQ(e.operands[0].kind, RuleExpr::Kind::Exists);
}

TEST(RuleParse, PrecedenceNotOverAndOverOr)
{
    auto r = parse_condition("exists(node.a) || !exists(node.b) && exists(node.c)");
    ASSERT_EQ(r.kind, RuleExpr::Kind::Or);
    ASSERT_EQ(r.operands[1].kind, RuleExpr::Kind::And);
    EXPECT_EQ(r.operands[1].operands[0].kind, RuleExpr::Kind::Not);
}

TEST(RuleParse, ErrorsCarryPosition)
{
    try {
        parse_condition("node.a == ");
        FAIL();
    } catch (const RuleSyntaxError& e) {
        EXPECT_EQ(e.position, 10u);
    }
    EXPECT_THROW(parse_condition("node.a === 1"), RuleSyntaxError);
    EXPECT_THROW(parse_condition("node.a == 1 &&"), RuleSyntaxError);
    EXPECT_THROW(parse_condition("node[x] == 1"), RuleSyntaxError);
    EXPECT_THROW(parse_condition("node.a matches \"(\""), RuleSyntaxError);
    EXPECT_THROW(parse_condition(""), RuleSyntaxError);
}

TEST(RuleParse, BarePathSugar)
{
    EXPECT_EQ(parse_condition(R"(memberName == "length")"), parse_condition(R"(node.memberName == "length")"));
    EXPECT_EQ(print(parse_condition(R"(memberName == "length")")), R"(node.memberName == "length")");
}

TEST(RuleEval, SpecExamples)
{
    auto u = dec_unit();
    const AstNode& ma = node_of(u, NodeType::MemberAccess);
    EXPECT_TRUE(eval(parse_condition(R"(node.memberName == "length")"), u, ma));
    EXPECT_FALSE(eval(parse_condition("node.foo.bar == 1"), u, ma));
    EXPECT_TRUE(eval(parse_condition("!(node.foo.bar == 1)"), u, ma));
    EXPECT_TRUE(eval(parse_condition("node.foo.bar != 1"), u, ma));
    const AstNode& call = node_of(u, NodeType::FunctionCall);
    EXPECT_FALSE(eval(parse_condition("exists(node.arguments[2])"), u, call));
    EXPECT_TRUE(eval(parse_condition("exists(node.arguments[0])"), u, call));
    EXPECT_FALSE(eval(parse_condition("exists(node.arguments.foo)"), u, call));
}

TEST(RuleEval, OperatorsAndCoercions)
{
    auto u = dec_unit();
    const AstNode& un = node_of(u, NodeType::UnaryOperation);
    auto yes = [&](const std::string& t) { return eval(parse_condition(t), u, un); };
    EXPECT_TRUE(yes(R"(node.operator == "--")"));
    EXPECT_TRUE(yes(R"(node.subExpression.expression.name contains "a")"));
    EXPECT_TRUE(yes(R"(node.nodeType matches "Unary.*")"));
    EXPECT_FALSE(yes(R"(node.nodeType matches "Unary")"));
    EXPECT_TRUE(yes(R"(node.prefix == false)"));
    EXPECT_TRUE(yes(R"(node.prefix == "false")"));
    EXPECT_TRUE(yes("node.id >= 0"));
    EXPECT_TRUE(yes(R"(node.id == ")" + std::to_string(un.id) + "\""));
    EXPECT_FALSE(yes("node.nodeType < 5"));
    EXPECT_FALSE(yes("node.prefix < true"));
    EXPECT_FALSE(yes(R"(node.subExpression contains "a")"));
}

TEST(RuleCanonical, SpecExamples)
{
    auto canon = [](const char* t) { return print(canonicalize(parse_condition(t))); };
    EXPECT_EQ(canon("exists(node.b) && exists(node.a)"), canon("exists(node.a) && exists(node.b)"));
    EXPECT_EQ(canon("!!exists(node.x)"), canon("exists(node.x)"));
    EXPECT_EQ(canon("node.a != 1"), canon("!(node.a == 1)"));
    EXPECT_EQ(canon("exists(node.a) && (exists(node.c) && exists(node.b))"),
              canon("(exists(node.b) && exists(node.a)) && exists(node.c)"));
    EXPECT_NE(canon("exists(node.a) && exists(node.b)"), canon("exists(node.a) || exists(node.b)"));
}

TEST(RuleInstall, FindingsAndUnion)
{
    auto u = dec_unit();
    auto never = install_rule(make_rule("never", "SWE-000", R"(node.nodeType == "NoSuchType")", 1.0, {}));
    for (const auto& inst : corpus::load_corpus(st::corpus_dir())) {
        auto cu = parse_source(inst.source, inst.instance_id);
        EXPECT_TRUE(never.run(cu, {}).empty());
    }
    auto r1 = make_rule("r1", "SWE-161", R"(node.nodeType == "UnaryOperation")", 1.0, {});
    auto r2 = make_rule("r2", "SWE-161", R"(node.memberName == "call")", 1.0, {});
    Registry a, b;
    a.add(install_rule(r1)).add(install_rule(r2));
    b.add(install_rule(r2)).add(install_rule(r1));
    auto fa = scan(u, a);
    EXPECT_EQ(fa.size(), 2u);
    EXPECT_EQ(fa, scan(u, b));
    for (const auto& f : fa) EXPECT_EQ(f.origin, Origin::Generated);
    EXPECT_THROW(make_rule("bad", "SWE-1", "node ==", 1.0, {}), RuleSyntaxError);
}

TEST(RuleStoreFile, RoundTripAndValidation)
{
    auto rule = make_rule("gen-swe-161-abc", "SWE-161", R"(node.operator == "--")", 0.9, {"P_rcbi", "deadbeef"});
    auto back = rule_from_json(json::parse(rule_to_json(rule).dump()));
    EXPECT_EQ(back.rule_id, rule.rule_id);
    EXPECT_EQ(back.condition, rule.condition);
    EXPECT_EQ(back.created_from, rule.created_from);
    EXPECT_DOUBLE_EQ(back.acceptance_accuracy, 0.9);
    auto j = rule_to_json(rule);
    j["origin"] = "magic";
    EXPECT_THROW(rule_from_json(j), MalformedRuleFile);
    j = rule_to_json(rule);
    j["condition"] = "node.a ==";
    EXPECT_THROW(rule_from_json(j), MalformedRuleFile);
    EXPECT_FALSE(valid_rule_id("../escape"));
    EXPECT_TRUE(valid_rule_id("gen-swe-161-abc"));
}

TEST(RuleStoreFile, StoreAddDisableLoad)
{
    st::TempDir dir;
    RuleStore store(dir.path() / "rules");
    auto rule = make_rule("gen-a", "SWE-161", R"(node.operator == "--")", 0.9, {"P_rcbi", "x"});
    store.add(rule);
    EXPECT_THROW(store.add(rule), DuplicateDetectorId);
    EXPECT_TRUE(store.contains("gen-a"));
    store.set_disabled("gen-a", true);
    Registry r;
    store.load_into(r);
    ASSERT_TRUE(r.find("gen-a"));
    EXPECT_FALSE(r.find("gen-a")->enabled);
    store.set_disabled("gen-a", false);
    EXPECT_TRUE(store.disabled().empty());
    ASSERT_EQ(store.load().size(), 1u);
    EXPECT_EQ(store.load()[0].origin_label, "generated");
}

// Randomized (rule, node) pairs against the reference evaluator.
TEST(RuleProperty, MatchesReferenceEvaluator)
{
    const auto& units = samples();
    ASSERT_FALSE(units.empty());
    std::mt19937_64 pick_rng(99);
    std::size_t pairs = 0, true_count = 0;
    for (std::uint64_t seed = 0; seed < 1500; ++seed) {
        RuleGen gen(seed);
        const std::string text = gen.text();
        RuleExpr rule;
        ASSERT_NO_THROW(rule = parse_condition(text)) << text;
        const auto& s = *units[pick_rng() % units.size()];
        for (int k = 0; k < 4; ++k) {
            const AstNode& n = s.unit.node(static_cast<NodeId>(pick_rng() % s.unit.size()));
            const bool got = eval(rule, s.unit, n);
            ASSERT_EQ(got, ref_eval(rule, *s.by_id.at(n.id))) << text << " on " << n.type_name << "#" << n.id;
            true_count += got;
            ++pairs;
        }
    }
    EXPECT_GE(pairs, 1000u);
    // Both outcomes occur often enough for the comparison to mean something.
    EXPECT_GT(true_count, pairs / 20);
    EXPECT_LT(true_count, pairs - pairs / 20);
}

TEST(RuleProperty, CanonicalizePreservesEval)
{
    const auto& units = samples();
    std::mt19937_64 pick_rng(7);
    for (std::uint64_t seed = 10000; seed < 11500; ++seed) {
        RuleGen gen(seed);
        const std::string text = gen.text();
        const RuleExpr rule = parse_condition(text);
        const RuleExpr canon = canonicalize(rule);
        EXPECT_EQ(print(canonicalize(canon)), print(canon)) << "idempotence: " << text;
        const auto& s = *units[pick_rng() % units.size()];
        for (int k = 0; k < 4; ++k) {
            const AstNode& n = s.unit.node(static_cast<NodeId>(pick_rng() % s.unit.size()));
            ASSERT_EQ(eval(rule, s.unit, n), eval(canon, s.unit, n)) << text << " vs " << print(canon);
        }
    }
}

TEST(RuleProperty, PrintParseRoundTrip)
{
    for (std::uint64_t seed = 20000; seed < 21000; ++seed) {
        RuleGen gen(seed);
        const std::string text = gen.text();
        const RuleExpr rule = parse_condition(text);
        const RuleExpr again = parse_condition(print(rule));
        EXPECT_EQ(again, rule) << text << " -> " << print(rule);
        EXPECT_EQ(print(again), print(rule));
    }
}
