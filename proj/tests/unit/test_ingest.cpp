// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "solsentry/detectors.hpp"
#include "solsentry/ingest.hpp"
#include "solsentry/parser.hpp"
#include "test_support.hpp"

using namespace solsentry;
using namespace solsentry::ingest;
namespace st = solsentry::testing;

namespace {

const std::string kVault = "0x1111111111111111111111111111111111111111";
const std::string kUnverified = "0x2222222222222222222222222222222222222222";
const std::string kThrottled = "0x3333333333333333333333333333333333333333";
const std::string kShrink = "0x4444444444444444444444444444444444444444";

struct Env {
    st::TempDir cache;
    std::shared_ptr<FixtureHttpClient> client = std::make_shared<FixtureHttpClient>(st::fixture("http"));

    FetchOptions options()
    {
        FetchOptions o;
        o.client = client;
        o.cache_dir = cache.path();
        return o;
    }
};

void write(const std::filesystem::path& p, const std::string& text)
{
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

SourceTree tree_of(std::map<std::string, std::string> files)
{
    SourceTree t;
    t.files = std::move(files);
    t.entry_file = t.files.begin()->first;
    return t;
}

} // namespace

TEST(Ingest, ClassifyTarget)
{
    EXPECT_EQ(classify_target(kVault), TargetKind::Address);
    EXPECT_EQ(classify_target("0xABCDEFabcdef0123456789012345678901234567"), TargetKind::Address);
    EXPECT_EQ(classify_target("0x123"), TargetKind::Local);
    EXPECT_EQ(classify_target("https://github.com/acme/tokens"), TargetKind::Github);
    EXPECT_EQ(classify_target("https://raw.githubusercontent.com/acme/tokens/main/a.sol"), TargetKind::Github);
    EXPECT_EQ(classify_target("contracts/Token.sol"), TargetKind::Local);
    EXPECT_THROW(classify_target("https://example.com/x.sol"), Error);
}

TEST(Ingest, StripCredentials)
{
    EXPECT_EQ(strip_credentials("https://h/api?module=x&apikey=SECRET"), "https://h/api?module=x");
    EXPECT_EQ(strip_credentials("https://h/api?apikey=SECRET&module=x"), "https://h/api?module=x");
    EXPECT_EQ(strip_credentials("https://h/api?a=1&apikey=S&b=2"), "https://h/api?a=1&b=2");
    EXPECT_EQ(strip_credentials("https://h/api"), "https://h/api");
}

TEST(Ingest, EtherscanStandardJson)
{
    Env env;
    auto o = env.options();
    o.etherscan_key = "KEY123";
    auto tree = fetch(kVault, o);
    EXPECT_EQ(tree.origin.kind, OriginKind::Etherscan);
    EXPECT_EQ(tree.origin.detail, "mainnet");
    ASSERT_EQ(tree.files.size(), 2u);
    EXPECT_TRUE(tree.files.contains("contracts/Vault.sol"));
    EXPECT_TRUE(tree.files.contains("contracts/Owned.sol"));
    EXPECT_EQ(tree.entry_file, "contracts/Vault.sol");
    EXPECT_TRUE(tree.unresolved.empty());
    for (const auto& url : env.client->requested()) EXPECT_EQ(url.find("KEY123"), std::string::npos);

    auto set = resolve_imports(tree);
    EXPECT_EQ(set.order, (std::vector<std::string>{"contracts/Owned.sol", "contracts/Vault.sol"}));

    std::size_t sends = 0;
    for (const auto& [path, text] : tree.files) {
        for (const auto& f : scan(parse_source(text, path), builtin_registry())) sends += f.swe_id == "SWE-140";
    }
    EXPECT_EQ(sends, 1u);
}

TEST(Ingest, EtherscanSingleFile)
{
    Env env;
    auto tree = fetch(kShrink, env.options());
    ASSERT_EQ(tree.files.size(), 1u);
    EXPECT_TRUE(tree.files.contains(tree.entry_file));
    EXPECT_NE(tree.files.begin()->second.find("xs.length--"), std::string::npos);
}

TEST(Ingest, EtherscanErrors)
{
    Env env;
    EXPECT_THROW(fetch(kUnverified, env.options()), UnverifiedContract);
    try {
        fetch(kThrottled, env.options());
        FAIL();
    } catch (const RateLimited& e) {
        EXPECT_EQ(e.retry_after, 5);
    }
    auto o = env.options();
    o.network = "sepolia";
    try {
        fetch(kShrink, o);
        FAIL();
    } catch (const RateLimited& e) {
        EXPECT_EQ(e.retry_after, 30);
    }
    EXPECT_THROW(fetch("0x5555555555555555555555555555555555555555", env.options()), Error);
    // Nothing that failed was cached.
    EXPECT_TRUE(std::filesystem::is_empty(env.cache.path()));
}

TEST(Ingest, GithubBlobFollowsRelativeImports)
{
    Env env;
    auto tree = fetch("https://github.com/acme/tokens/blob/main/contracts/Token.sol", env.options());
    EXPECT_EQ(tree.origin.kind, OriginKind::Github);
    EXPECT_EQ(tree.origin.detail, "main");
    EXPECT_EQ(tree.entry_file, "contracts/Token.sol");
    EXPECT_EQ(tree.files.size(), 2u);
    EXPECT_TRUE(tree.files.contains("contracts/SafeMath.sol"));
    auto findings = scan(parse_source(tree.files.at(tree.entry_file), tree.entry_file), builtin_registry());
    ASSERT_EQ(findings.size(), 1u);
    EXPECT_EQ(findings[0].swe_id, "SWE-114");
}

TEST(Ingest, GithubRepoListsSolFilesOnly)
{
    Env env;
    auto tree = fetch("https://github.com/acme/tokens", env.options());
    EXPECT_EQ(tree.origin.detail, "HEAD");
    EXPECT_EQ(tree.files.size(), 2u);
    EXPECT_FALSE(tree.files.contains("README.md"));
    EXPECT_THROW(fetch("https://github.com/acme/missing", env.options()), Error);
}

TEST(Ingest, BranchCacheExpiresAfterTtl)
{
    Env env;
    std::int64_t clock = 1'000'000;
    auto o = env.options();
    o.now = [&] { return clock; };
    const std::string url = "https://github.com/acme/tokens";
    fetch(url, o);
    const auto first = env.client->requested().size();
    EXPECT_GT(first, 0u);

    clock += 3600;
    auto cached = fetch(url, o);
    EXPECT_EQ(env.client->requested().size(), first);
    EXPECT_EQ(cached.fetched_at, 1'000'000);

    clock += 24 * 3600;
    auto fresh = fetch(url, o);
    EXPECT_GT(env.client->requested().size(), first);
    EXPECT_EQ(fresh.fetched_at, clock);
}

TEST(Ingest, AddressesAreCachedIndefinitely)
{
    Env env;
    std::int64_t clock = 0;
    auto o = env.options();
    o.now = [&] { return clock; };
    fetch(kVault, o);
    clock += 365LL * 24 * 3600;
    const auto before = env.client->requested().size();
    fetch(kVault, o);
    EXPECT_EQ(env.client->requested().size(), before);
}

TEST(Ingest, OfflineServesCacheOrFails)
{
    Env env;
    FetchOptions offline;
    offline.offline = true;
    offline.cache_dir = env.cache.path();
    EXPECT_THROW(fetch(kVault, offline), NetworkDisabled);

    fetch(kVault, env.options());
    auto tree = fetch(kVault, offline);
    EXPECT_EQ(tree.files.size(), 2u);

    // Offline also serves a stale branch entry.
    std::int64_t clock = 0;
    auto o = env.options();
    o.now = [&] { return clock; };
    fetch("https://github.com/acme/tokens", o);
    offline.now = [] { return std::int64_t{10'000'000}; };
    EXPECT_EQ(fetch("https://github.com/acme/tokens", offline).files.size(), 2u);
}

TEST(Ingest, TreeJsonRoundTrip)
{
    SourceTree t;
    t.entry_file = "a.sol";
    t.files = {{"a.sol", "import \"./b.sol\";"}, {"b.sol", "contract B {}"}};
    t.origin = {OriginKind::Github, "https://github.com/x/y", "main"};
    t.fetched_at = 42;
    t.unresolved = {"@oz/x.sol"};
    auto back = tree_from_json(nlohmann::json::parse(tree_to_json(t).dump()));
    EXPECT_EQ(back.entry_file, t.entry_file);
    EXPECT_EQ(back.files, t.files);
    EXPECT_EQ(back.origin.kind, t.origin.kind);
    EXPECT_EQ(back.origin.location, t.origin.location);
    EXPECT_EQ(back.origin.detail, t.origin.detail);
    EXPECT_EQ(back.fetched_at, 42);
    EXPECT_EQ(back.unresolved, t.unresolved);
}

TEST(Imports, ImportForms)
{
    const std::string src = "import \"./a.sol\";\n"
                            "import {X, Y} from './b.sol';\n"
                            "import * as M from \"@oz/c.sol\";\n"
                            "import \"d.sol\" as D;\n"
                            "// import \"commented.sol\";\n"
                            "contract C {}";
    EXPECT_EQ(import_paths(src), (std::vector<std::string>{"./a.sol", "./b.sol", "@oz/c.sol", "d.sol"}));
}

TEST(Imports, ResolutionRules)
{
    auto t = tree_of({{"contracts/A.sol", ""},
                      {"contracts/lib/B.sol", ""},
                      {"lib/openzeppelin/token/ERC20.sol", ""},
                      {"node_modules/pkg/X.sol", ""}});
    EXPECT_EQ(resolve_import(t, "contracts/A.sol", "./lib/B.sol"), "contracts/lib/B.sol");
    EXPECT_EQ(resolve_import(t, "contracts/lib/B.sol", "../A.sol"), "contracts/A.sol");
    EXPECT_EQ(resolve_import(t, "contracts/A.sol", "pkg/X.sol"), "node_modules/pkg/X.sol");
    EXPECT_EQ(resolve_import(t, "contracts/A.sol", "@oz/token/ERC20.sol", {{"@oz/", "lib/openzeppelin/"}}),
              "lib/openzeppelin/token/ERC20.sol");
    EXPECT_FALSE(resolve_import(t, "contracts/A.sol", "./Missing.sol"));
    EXPECT_FALSE(resolve_import(t, "contracts/A.sol", "@oz/token/ERC20.sol"));
}

TEST(Imports, DependenciesFirstAndCycles)
{
    auto chain = tree_of({{"a.sol", "import \"./b.sol\";"}, {"b.sol", "import \"./c.sol\";"}, {"c.sol", ""}});
    chain.entry_file = "a.sol";
    auto set = resolve_imports(chain);
    EXPECT_EQ(set.order, (std::vector<std::string>{"c.sol", "b.sol", "a.sol"}));
    EXPECT_TRUE(set.cycles.empty());

    auto cyc = tree_of({{"a.sol", "import \"./b.sol\";"}, {"b.sol", "import \"./a.sol\"; import \"./x.sol\";"}});
    auto cs = resolve_imports(cyc);
    ASSERT_EQ(cs.cycles.size(), 1u);
    EXPECT_EQ(cs.cycles[0].size(), 2u);
    EXPECT_EQ(cs.order.size(), 2u);
    EXPECT_EQ(cs.unresolved, (std::set<std::string>{"./x.sol"}));

    auto self = tree_of({{"s.sol", "import \"./s.sol\";"}});
    EXPECT_EQ(resolve_imports(self).cycles.size(), 1u);
}

// Every file appears once in the order and after all of its resolved imports.
TEST(ImportsProperty, OrderRespectsEdgesOnRandomAcyclicTrees)
{
    std::mt19937_64 rng(11);
    for (int round = 0; round < 200; ++round) {
        const int n = 1 + static_cast<int>(rng() % 8);
        std::map<std::string, std::string> files;
        std::map<std::string, std::vector<std::string>> deps;
        for (int i = 0; i < n; ++i) {
            const std::string name = "f" + std::to_string(i) + ".sol";
            std::string text;
            for (int j = 0; j < i; ++j) {
                if (rng() % 3 == 0) {
                    text += "import \"./f" + std::to_string(j) + ".sol\";\n";
                    deps[name].push_back("f" + std::to_string(j) + ".sol");
                }
            }
            files[name] = text;
        }
        auto set = resolve_imports(tree_of(files));
        ASSERT_EQ(set.order.size(), files.size());
        EXPECT_TRUE(set.cycles.empty());
        std::map<std::string, std::size_t> pos;
        for (std::size_t k = 0; k < set.order.size(); ++k) pos[set.order[k]] = k;
        for (const auto& [from, to] : deps) {
            for (const auto& d : to) EXPECT_LT(pos.at(d), pos.at(from)) << from << " -> " << d;
        }
    }
}

TEST(Ingest, LocalFileFollowsImports)
{
    st::TempDir dir;
    write(dir / "src/Main.sol", "import \"./util/Lib.sol\";\nimport \"@ext/Gone.sol\";\ncontract Main {}\n");
    write(dir / "src/util/Lib.sol", "library Lib {}\n");
    write(dir / "src/Unrelated.sol", "contract U {}\n");
    auto tree = fetch((dir / "src/Main.sol").string());
    EXPECT_EQ(tree.origin.kind, OriginKind::Local);
    EXPECT_EQ(tree.entry_file, "Main.sol");
    EXPECT_EQ(tree.files.size(), 2u);
    EXPECT_TRUE(tree.files.contains("util/Lib.sol"));
    EXPECT_EQ(tree.unresolved, (std::set<std::string>{"@ext/Gone.sol"}));

    auto whole = fetch((dir / "src").string());
    EXPECT_EQ(whole.files.size(), 3u);
    EXPECT_THROW(fetch((dir / "nope.sol").string()), NotFound);
}
