// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>

#include "solsentry/ast_json.hpp"
#include "solsentry/corpus.hpp"
#include "solsentry/lexer.hpp"
#include "solsentry/parser.hpp"
#include "solsentry/util.hpp"
#include "test_support.hpp"

using namespace solsentry;
namespace st = solsentry::testing;

namespace {

const char* kWallet = R"(pragma solidity ^0.5.0;

import "./Owned.sol";

contract Wallet is Owned {
    mapping(address => uint256) public balances;
    uint256[] public history;
    event Paid(address indexed to, uint256 amount);

    modifier onlyOwner() {
        require(msg.sender == owner, "owner");
        _;
    }

    function deposit() public payable {
        balances[msg.sender] += msg.value;
        history.push(msg.value);
    }

    function pay(address payable to, uint256 amount) external onlyOwner returns (bool) {
        if (amount > balances[to]) {
            revert("too much");
        } else {
            balances[to] -= amount;
        }
        (bool ok, ) = to.call{value: amount, gas: 2300}("");
        emit Paid(to, amount);
        return ok ? true : false;
    }

    receive() external payable {}
}
)";

const AstNode* first_of(const SourceUnit& u, NodeType t)
{
    for (const auto& n : u.nodes()) {
        if (n.type == t) return &n;
    }
    return nullptr;
}

std::size_t count_of(const SourceUnit& u, NodeType t)
{
    std::size_t k = 0;
    for (const auto& n : u.nodes()) k += n.type == t;
    return k;
}

} // namespace

TEST(Parser, BuildsSolcStyleTree)
{
    auto u = parse_source(kWallet, "wallet.sol");
    EXPECT_EQ(u.root().type, NodeType::SourceUnit);
    ASSERT_EQ(u.contracts().size(), 1u);
    const AstNode& c = *u.contracts()[0];
    EXPECT_EQ(c.attr_string("name"), "Wallet");
    EXPECT_EQ(count_of(u, NodeType::InheritanceSpecifier), 1u);
    EXPECT_EQ(count_of(u, NodeType::ImportDirective), 1u);
    EXPECT_EQ(count_of(u, NodeType::ModifierDefinition), 1u);
    EXPECT_EQ(count_of(u, NodeType::EventDefinition), 1u);
    EXPECT_EQ(count_of(u, NodeType::PlaceholderStatement), 1u);
    EXPECT_EQ(count_of(u, NodeType::FunctionCallOptions), 1u);
    EXPECT_EQ(count_of(u, NodeType::Conditional), 1u);
    EXPECT_EQ(count_of(u, NodeType::EmitStatement), 1u);
    EXPECT_EQ(count_of(u, NodeType::Mapping), 1u);
    EXPECT_EQ(count_of(u, NodeType::ArrayTypeName), 1u);

    const AstNode* opts = first_of(u, NodeType::FunctionCallOptions);
    ASSERT_NE(opts, nullptr);
    EXPECT_EQ(opts->attributes["names"], nlohmann::json::array({"value", "gas"}));

    std::vector<std::string> kinds;
    for (const auto& n : u.nodes()) {
        if (n.type == NodeType::FunctionDefinition) kinds.push_back(n.attr_string("kind"));
    }
    EXPECT_EQ(kinds, (std::vector<std::string>{"function", "function", "receive"}));
}

TEST(Parser, IdsAreDenseAndParentsConsistent)
{
    auto u = parse_source(kWallet, "wallet.sol");
    for (std::size_t i = 0; i < u.size(); ++i) {
        const AstNode& n = u.node(static_cast<NodeId>(i));
        EXPECT_EQ(n.id, static_cast<NodeId>(i));
        for (const AstNode* child : u.all_children(n)) {
            EXPECT_EQ(child->parent, n.id);
            EXPECT_GT(child->id, n.id);
        }
    }
    EXPECT_EQ(u.root().parent, kNoNode);
}

TEST(Parser, PragmaConstraint)
{
    auto u = parse_source("pragma solidity >=0.4.22 <0.6.0;\ncontract A {}\n", "a.sol");
    auto c = u.solidity_constraint();
    ASSERT_TRUE(c);
    EXPECT_TRUE(c->satisfied_by({0, 5, 17}));
    EXPECT_FALSE(c->satisfied_by({0, 6, 0}));
    EXPECT_EQ(c->lower_bound(), (Version{0, 4, 22}));
}

TEST(Parser, LegacyGasAndValueChains)
{
    auto u = parse_source("contract A { function f(address a) public { a.call.value(1).gas(2300)(\"\"); } }", "a.sol");
    std::vector<std::string> members;
    for (const auto& n : u.nodes()) {
        if (n.type == NodeType::MemberAccess) members.push_back(n.attr_string("memberName"));
    }
    EXPECT_EQ(members, (std::vector<std::string>{"gas", "value", "call"}));
}

TEST(Parser, SyntaxErrorCarriesPosition)
{
    try {
        parse_source("contract A {\n    function f() public {\n        x = ;\n    }\n}\n", "bad.sol");
        FAIL() << "expected SyntaxError";
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.line, 3u);
        EXPECT_EQ(e.column, 13u);
        EXPECT_EQ(e.found, ";");
    }
}

TEST(Parser, OutOfSubsetConstructsAreRejected)
{
    const std::vector<std::pair<std::string, std::string>> cases{
        {"contract A { function f() public { assembly { mstore(0, 1) } } }", "inline assembly"},
        {"contract A { struct S { uint256 x; } }", "struct definition"},
        {"contract A { enum E { X } }", "enum definition"},
        {"library L {} contract A { using L for uint256; }", "using definition"},
    };
    for (const auto& [src, construct] : cases) {
        try {
            parse_source(src, "x.sol");
            ADD_FAILURE() << "accepted: " << src;
        } catch (const UnsupportedConstruct& e) {
            EXPECT_EQ(e.construct, construct) << src;
        }
    }
}

TEST(Parser, RejectsInvalidUtf8)
{
    EXPECT_TRUE(is_valid_utf8("contract A {} // caf\xc3\xa9"));
    EXPECT_FALSE(is_valid_utf8("\xc3\x28"));
    EXPECT_THROW(parse_source("contract A {} // \xff", "x.sol"), Error);
}

TEST(Lexer, StripsCommentsButNotStrings)
{
    EXPECT_EQ(strip_comments("a // x\nb /* y */ c \"// kept\""), "a \nb   c \"// kept\"");
    EXPECT_EQ(strip_comments("a/**/b"), "a b");
    auto toks = tokenize("x += 0x1f; // done");
    ASSERT_EQ(toks.size(), 5u);
    EXPECT_EQ(toks[1].text, "+=");
    EXPECT_EQ(toks[2].kind, TokenKind::Number);
    EXPECT_EQ(toks.back().kind, TokenKind::End);
    EXPECT_THROW(tokenize("\"open"), SyntaxError);
}

TEST(Version, CaretTildeAndPartial)
{
    auto caret = VersionConstraint::parse("^0.5.0");
    ASSERT_TRUE(caret);
    EXPECT_TRUE(caret->satisfied_by({0, 5, 17}));
    EXPECT_FALSE(caret->satisfied_by({0, 6, 0}));
    auto tilde = VersionConstraint::parse("~0.4.24");
    ASSERT_TRUE(tilde);
    EXPECT_TRUE(tilde->satisfied_by({0, 4, 26}));
    EXPECT_FALSE(tilde->satisfied_by({0, 5, 0}));
    auto partial = VersionConstraint::parse("0.8");
    ASSERT_TRUE(partial);
    EXPECT_TRUE(partial->satisfied_by({0, 8, 20}));
    EXPECT_EQ(partial->lower_bound(), (Version{0, 8, 0}));
    auto alt = VersionConstraint::parse("0.4.24 || ^0.7.0");
    ASSERT_TRUE(alt);
    EXPECT_TRUE(alt->satisfied_by({0, 7, 6}));
    EXPECT_EQ(alt->lower_bound(), (Version{0, 4, 24}));
    EXPECT_FALSE(VersionConstraint::parse("banana"));
}

TEST(AstJson, OpaqueNodesSurviveButDoNotPrint)
{
    const std::string doc = R"({"nodeType":"SourceUnit","id":0,"src":"0:10:0","nodes":[
        {"nodeType":"StructDefinition","id":1,"src":"0:10:0","name":"S",
         "members":[{"nodeType":"VariableDeclaration","id":2,"src":"2:5:0","name":"x","typeName":null}]}]})";
    auto u = from_json(doc);
    ASSERT_EQ(u.size(), 3u);
    EXPECT_EQ(u.node(1).type, NodeType::Opaque);
    EXPECT_EQ(u.node(1).type_name, "StructDefinition");
    EXPECT_EQ(u.node(1).attr_string("name"), "S");
    EXPECT_EQ(u.node(2).type, NodeType::VariableDeclaration);
    EXPECT_THROW(pretty_print(u), PrintUnsupported);
    auto again = from_json(to_json(u));
    EXPECT_TRUE(structurally_equal(u, again, true)) << first_difference(u, again, true);
}

TEST(AstJson, RejectsSpansOutsideText)
{
    const std::string doc = R"({"nodeType":"SourceUnit","id":0,"src":"0:50:0","nodes":[]})";
    EXPECT_THROW(from_json(doc, "x", std::string("short")), MalformedAst);
    EXPECT_THROW(from_json("{\"nodes\":[]}"), MalformedAst);
}

// Every corpus file survives parse -> print -> parse and parse -> JSON -> parse.
TEST(RoundTrip, WholeCorpus)
{
    auto instances = corpus::load_corpus(st::corpus_dir());
    ASSERT_EQ(instances.size(), 150u);
    for (const auto& inst : instances) {
        auto u = parse_source(inst.source, inst.instance_id);
        auto printed = parse_source(pretty_print(u), inst.instance_id);
        EXPECT_TRUE(structurally_equal(u, printed)) << inst.instance_id << ": " << first_difference(u, printed);
        auto back = from_json(to_json(u), inst.instance_id, inst.source);
        EXPECT_TRUE(structurally_equal(u, back, true)) << inst.instance_id << ": " << first_difference(u, back, true);
        EXPECT_EQ(pretty_print(printed), pretty_print(u)) << inst.instance_id;
    }
}

// Node spans start at a token start and end at a token end. Omitted lists are
// zero-length and sit right after the preceding token.
TEST(RoundTrip, SpansSitOnTokenBoundaries)
{
    for (const auto& inst : corpus::load_corpus(st::corpus_dir())) {
        auto u = parse_source(inst.source, inst.instance_id);
        std::set<std::uint32_t> starts, ends;
        for (const auto& t : tokenize(inst.source)) {
            if (t.kind == TokenKind::End) continue;
            starts.insert(t.offset);
            ends.insert(t.end());
        }
        for (const auto& n : u.nodes()) {
            if (n.type == NodeType::SourceUnit) continue;
            if (n.span.length == 0) {
                EXPECT_TRUE(ends.count(n.span.offset)) << inst.instance_id << " empty " << n.type_name << " @" << n.span.offset;
            } else {
                EXPECT_TRUE(starts.count(n.span.offset)) << inst.instance_id << " " << n.type_name << " @" << n.span.offset;
                EXPECT_TRUE(ends.count(n.span.end())) << inst.instance_id << " " << n.type_name << " @" << n.span.end();
            }
            if (n.parent != kNoNode) {
                EXPECT_TRUE(u.node(n.parent).span.contains(n.span)) << inst.instance_id << " " << n.type_name;
            }
        }
    }
}
