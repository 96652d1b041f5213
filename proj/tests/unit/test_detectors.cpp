// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "solsentry/corpus.hpp"
#include "solsentry/detectors.hpp"
#include "solsentry/parser.hpp"
#include "solsentry/rule_dsl.hpp"
#include "solsentry/util.hpp"
#include "test_support.hpp"

using namespace solsentry;
namespace st = solsentry::testing;
namespace ids = solsentry::detector_ids;

namespace {

SourceUnit contract(const std::string& members, const std::string& pragma = "^0.5.0")
{
    return parse_source("pragma solidity " + pragma + ";\ncontract A {\n" + members + "\n}\n", "a.sol");
}

SourceUnit in_function(const std::string& body, const std::string& pragma = "^0.5.0",
                       const std::string& extra = "")
{
    return contract(extra + "\nfunction f(address payable addr, uint256 g) public {\n" + body + "\n}", pragma);
}

std::vector<Finding> only(const std::vector<Finding>& fs, std::string_view detector, std::optional<Severity> sev = {})
{
    std::vector<Finding> out;
    for (const auto& f : fs) {
        if (f.detector_id == detector && (!sev || f.severity == *sev)) out.push_back(f);
    }
    return out;
}

std::string text_at(const SourceUnit& u, const Finding& f)
{
    return u.raw_text().substr(f.span.offset, f.span.length);
}

} // namespace

TEST(Scan, EmptyContractHasNoFindings)
{
    auto u = parse_source("contract A {}", "a.sol");
    EXPECT_TRUE(scan(u, builtin_registry()).empty());
}

TEST(Scan, Swe161FixtureGivesOneFindingAtTheUnaryOperation)
{
    const std::string src = read_file(st::fixture("swe161_dec.sol"));
    auto u = parse_source(src, "swe161_dec.sol");
    auto fs = scan(u, builtin_registry());
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(fs[0].swe_id, "SWE-161");
    EXPECT_EQ(text_at(u, fs[0]), "a.length--");
    EXPECT_EQ(fs[0].line, 11u);
    EXPECT_EQ(fs[0].column, 9u);
    EXPECT_EQ(findings_to_json(scan(u, builtin_registry())).dump(), findings_to_json(fs).dump());
}

TEST(Swe161, Patterns)
{
    EXPECT_EQ(detect_swe161(in_function("uint256[] storage a = xs; a.length--;", "^0.5.0", "uint256[] xs;")).size(), 1u);
    EXPECT_EQ(detect_swe161(in_function("uint n = xs.length; n;", "^0.5.0", "uint256[] xs;")).size(), 0u);
    EXPECT_EQ(detect_swe161(in_function("xs.length += 2; ++xs.length; xs.length = 1;", "^0.5.0", "uint256[] xs;")).size(), 3u);
    EXPECT_EQ(detect_swe161(in_function("xs.length *= 2;", "^0.5.0", "uint256[] xs;")).size(), 0u);
}

TEST(Swe161, PragmaGate)
{
    auto u = in_function("xs.length = 0;", "^0.8.0", "uint256[] xs;");
    EXPECT_TRUE(detect_swe161(u).empty());
    ScanOptions off;
    off.pragma_gate = false;
    EXPECT_EQ(detect_swe161(u, off).size(), 1u);
    // A range that still admits 0.5.x keeps the finding.
    EXPECT_EQ(detect_swe161(in_function("xs.length = 0;", ">=0.5.0 <0.9.0", "uint256[] xs;")).size(), 1u);
}

TEST(Swe134, Patterns)
{
    auto u = in_function("addr.call{gas: 2300, value: 1}(\"\");", "^0.8.0");
    auto fs = detect_swe134(u);
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(text_at(u, fs[0]), "2300");
    EXPECT_TRUE(detect_swe134(in_function("addr.call{value: 1}(\"\");", "^0.8.0")).empty());
    EXPECT_TRUE(detect_swe134(in_function("addr.call{gas: g}(\"\");", "^0.8.0")).empty());
    EXPECT_EQ(detect_swe134(in_function("addr.call.gas(5000)(\"\");")).size(), 1u);
    EXPECT_TRUE(detect_swe134(in_function("addr.call.gas(gasleft())(\"\");")).empty());
    EXPECT_EQ(detect_swe134(in_function("addr.transfer(1);")).size(), 1u);
    EXPECT_EQ(detect_swe134(in_function("require(addr.send(1));")).size(), 1u);
}

TEST(Swe134, TokenTransferIsNotAnEtherTransfer)
{
    const std::string src = R"(pragma solidity ^0.5.0;
interface IToken { function transfer(address to, uint256 v) external returns (bool); }
contract A {
    IToken token;
    function f(address to) public { token.transfer(to, 1); IToken(msg.sender).transfer(to, 2); }
})";
    auto u = parse_source(src, "a.sol");
    EXPECT_TRUE(detect_swe134(u).empty());
    EXPECT_TRUE(detect_swe140(u).empty());
}

TEST(Swe114, ApproveRace)
{
    const std::string state = "mapping(address => mapping(address => uint256)) allowed;";
    auto racy = contract(state + "\nfunction approve(address spender, uint256 value) public returns (bool) {\n"
                                 "allowed[msg.sender][spender] = value; return true; }");
    auto fs = detect_swe114(racy);
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(text_at(racy, fs[0]), "allowed[msg.sender][spender] = value");

    auto guarded = contract(state + "\nfunction approve(address spender, uint256 value) public returns (bool) {\n"
                                    "require(allowed[msg.sender][spender] == 0 || value == 0);\n"
                                    "allowed[msg.sender][spender] = value; return true; }");
    EXPECT_TRUE(detect_swe114(guarded).empty());

    auto none = contract(state + "\nfunction grant(address spender, uint256 value) public {\n"
                                 "allowed[msg.sender][spender] = value; }");
    EXPECT_TRUE(detect_swe114(none).empty());

    // A guard on only one branch does not dominate the write.
    auto branchy = contract(state + "\nfunction approve(address spender, uint256 value) public {\n"
                                    "if (value > 10) { require(value == 0); }\n"
                                    "allowed[msg.sender][spender] = value; }");
    EXPECT_EQ(detect_swe114(branchy).size(), 1u);

    auto internal = contract(state + "\nfunction approve(address spender, uint256 value) internal {\n"
                                     "allowed[msg.sender][spender] = value; }");
    EXPECT_TRUE(detect_swe114(internal).empty());
}

TEST(Swe138, LockedMoney)
{
    auto locked = contract("function deposit() public payable {}");
    auto fs = detect_swe138(locked);
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(fs[0].span, locked.contracts()[0]->span);
    EXPECT_EQ(fs[0].severity, Severity::High);

    auto with_exit = contract("function deposit() public payable {}\n"
                              "function withdraw() public { msg.sender.transfer(address(this).balance); }");
    EXPECT_TRUE(detect_swe138(with_exit).empty());

    auto with_call = contract("function deposit() public payable {}\n"
                              "function withdraw() public { (bool ok, ) = msg.sender.call{value: 1}(\"\"); require(ok); }",
                              "^0.8.0");
    EXPECT_TRUE(detect_swe138(with_call).empty());

    auto receive_only = contract("receive() external payable {}", "^0.8.0");
    EXPECT_EQ(detect_swe138(receive_only).size(), 1u);

    EXPECT_TRUE(detect_swe138(contract("function f() public {}")).empty());
}

TEST(Swe138, MintCheck)
{
    auto u = contract("function _mint(address to, uint256 id) internal {}\n"
                      "function give(address to) public { _mint(to, 7); }");
    auto fs = detect_swe138(u);
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(fs[0].severity, Severity::Info);
    EXPECT_NE(fs[0].message.find("safeMint"), std::string::npos);
    ScanOptions off;
    off.mint_check = false;
    EXPECT_TRUE(detect_swe138(u, off).empty());
}

TEST(Swe140, UncheckedSend)
{
    auto bare = in_function("addr.send(1);");
    auto fs = only(detect_swe140(bare), ids::kSwe140, Severity::High);
    ASSERT_EQ(fs.size(), 1u);
    EXPECT_EQ(text_at(bare, fs[0]), "addr.send(1)");
    EXPECT_TRUE(detect_swe140(in_function("require(addr.send(1));")).empty());
    EXPECT_TRUE(detect_swe140(in_function("bool ok = addr.send(1); if (!ok) { revert(); }")).empty());
    EXPECT_EQ(detect_swe140(in_function("bool ok = addr.send(1);")).size(), 1u);

    auto transfer = detect_swe140(in_function("addr.transfer(1);"));
    ASSERT_EQ(transfer.size(), 1u);
    EXPECT_EQ(transfer[0].severity, Severity::Info);
    EXPECT_NE(transfer[0].message.find("call"), std::string::npos);
}

TEST(Registry, DuplicateAndToggles)
{
    Registry r = builtin_registry();
    EXPECT_EQ(r.size(), 5u);
    EXPECT_THROW(r.add(*r.find(ids::kSwe161)), DuplicateDetectorId);
    EXPECT_TRUE(r.set_enabled(ids::kSwe161, false));
    EXPECT_FALSE(r.set_enabled("nope", false));
    auto u = parse_source(read_file(st::fixture("swe161_dec.sol")), "x.sol");
    EXPECT_TRUE(scan(u, r).empty());
    EXPECT_TRUE(r.remove(ids::kSwe161));
    EXPECT_FALSE(r.contains(ids::kSwe161));
}

TEST(Registry, GeneratedRuleFindingsCarryOrigin)
{
    Registry r = builtin_registry();
    auto rule = rules::make_rule("gen-x", "SWE-161", "node.nodeType == \"UnaryOperation\" && node.operator == \"--\"", 1.0,
                                 {"P_rcbi", "test"});
    r.add(rules::install_rule(rule));
    auto u = parse_source(read_file(st::fixture("swe161_dec.sol")), "x.sol");
    auto fs = scan(u, r);
    ASSERT_EQ(fs.size(), 2u);
    auto gen = only(fs, "gen-x");
    ASSERT_EQ(gen.size(), 1u);
    EXPECT_EQ(gen[0].origin, Origin::Generated);
    EXPECT_EQ(only(fs, ids::kSwe161)[0].origin, Origin::Builtin);

    // Disabled equals never registered.
    r.set_enabled("gen-x", false);
    EXPECT_EQ(scan(u, r), scan(u, builtin_registry()));
}

TEST(Registry, ThrowingDetectorBecomesDiagnostic)
{
    Registry r;
    DetectorDescriptor d;
    d.detector_id = "boom";
    d.swe_id = "SWE-000";
    d.run = [](const SourceUnit&, const ScanOptions&) -> std::vector<Finding> { throw std::runtime_error("bad"); };
    r.add(std::move(d));
    register_builtins(r);
    auto u = parse_source(read_file(st::fixture("swe161_dec.sol")), "x.sol");
    auto fs = scan(u, r);
    ASSERT_EQ(fs.size(), 2u);
    auto diag = only(fs, "boom");
    ASSERT_EQ(diag.size(), 1u);
    EXPECT_EQ(diag[0].severity, Severity::Info);
}

TEST(Registry, FindingsAreSorted)
{
    auto u = in_function("addr.send(1); addr.transfer(2); addr.call.gas(10)(\"\");");
    auto fs = scan(u, builtin_registry());
    EXPECT_TRUE(std::is_sorted(fs.begin(), fs.end(), finding_less));
    EXPECT_GE(fs.size(), 4u);
}

// Isolation: removing one detector drops exactly its findings.
TEST(RegistryProperty, IsolationOverCorpus)
{
    const Registry all = builtin_registry();
    for (const auto& inst : corpus::load_corpus(st::corpus_dir())) {
        auto u = parse_source(inst.source, inst.instance_id);
        const auto full = scan(u, all);
        for (const auto* d : all.descriptors()) {
            Registry without = builtin_registry();
            without.remove(d->detector_id);
            std::vector<Finding> expected;
            std::copy_if(full.begin(), full.end(), std::back_inserter(expected),
                         [&](const Finding& f) { return f.detector_id != d->detector_id; });
            EXPECT_EQ(scan(u, without), expected) << inst.instance_id << " without " << d->detector_id;
        }
    }
}

TEST(Findings, JsonShape)
{
    auto u = parse_source(read_file(st::fixture("swe161_dec.sol")), "x.sol");
    auto j = findings_to_json(scan(u, builtin_registry()));
    ASSERT_EQ(j.size(), 1u);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j[0].items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"swe_id", "detector_id", "origin", "file_id", "span", "message", "severity"}));
    EXPECT_EQ(j[0]["span"]["line"], 11);
    EXPECT_EQ(j[0]["origin"], "builtin");
    EXPECT_EQ(format_findings_text(scan(u, builtin_registry())),
              "x.sol:11:9: high [SWE-161/swe161-array-length] array length modified directly with '--'\n");
}
