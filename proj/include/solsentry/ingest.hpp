// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "solsentry/errors.hpp"
#include "solsentry/http.hpp"

namespace solsentry::ingest {

class NotFound : public Error {
public:
    using Error::Error;
};
class RateLimited : public Error {
public:
    RateLimited(std::string what, std::optional<int> retry_after_seconds)
        : Error(std::move(what)), retry_after(retry_after_seconds)
    {
    }
    std::optional<int> retry_after;
};
class UnverifiedContract : public Error {
public:
    explicit UnverifiedContract(std::string address_)
        : Error("contract " + address_ + " has no verified source"), address(std::move(address_))
    {
    }
    std::string address;
};
class NetworkDisabled : public Error {
public:
    using Error::Error;
};

enum class OriginKind { Local, Github, Etherscan };
std::string_view origin_kind_name(OriginKind k);

struct TreeOrigin {
    OriginKind kind = OriginKind::Local;
    /// Path, repository URL or address.
    std::string location;
    /// Revision for GitHub, network for Etherscan, empty for local.
    std::string detail;
};

struct SourceTree {
    std::string entry_file;
    std::map<std::string, std::string> files; // '/'-separated relative paths
    TreeOrigin origin;
    std::int64_t fetched_at = 0; // seconds since the epoch
    std::set<std::string> unresolved;
};

nlohmann::ordered_json tree_to_json(const SourceTree& tree);
SourceTree tree_from_json(const nlohmann::json& j);

/// The narrow network seam: live HTTP or a fixture directory.
class HttpClient {
public:
    virtual ~HttpClient() = default;
    virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
    /// True when calls leave the machine.
    virtual bool is_network() const = 0;
};

class LiveHttpClient : public HttpClient {
public:
    explicit LiveHttpClient(std::chrono::seconds timeout = std::chrono::seconds(30)) : timeout_(timeout) {}
    HttpResponse get(const std::string& url, const HttpHeaders& headers) override;
    bool is_network() const override { return true; }

private:
    std::chrono::seconds timeout_;
};

/// Serves `<dir>/index.json`: {url: {status, body | body_file, headers}}.
/// The `apikey` query parameter is dropped from URLs before lookup.
class FixtureHttpClient : public HttpClient {
public:
    explicit FixtureHttpClient(std::filesystem::path dir);
    HttpResponse get(const std::string& url, const HttpHeaders& headers) override;
    bool is_network() const override { return false; }
    const std::vector<std::string>& requested() const { return requested_; }

private:
    std::filesystem::path dir_;
    nlohmann::json index_;
    std::vector<std::string> requested_;
};

/// URL with any `apikey=` query parameter removed.
std::string strip_credentials(const std::string& url);

struct FetchOptions {
    bool offline = false;
    std::string network = "mainnet";
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::string> etherscan_key;
    std::optional<std::string> github_token;
    /// Defaults to a LiveHttpClient.
    std::shared_ptr<HttpClient> client;
    std::function<std::int64_t()> now;
    /// Import prefix remappings, e.g. {"@oz/", "lib/openzeppelin/"}.
    std::vector<std::pair<std::string, std::string>> remappings;
};

enum class TargetKind { Local, Github, Address };
TargetKind classify_target(const std::string& target);

/// Materializes every source file of a local path, GitHub URL or address.
/// Remote results are cached under options.cache_dir.
SourceTree fetch(const std::string& target, const FetchOptions& options = {});

/// Import strings of one file, in source order.
std::vector<std::string> import_paths(const std::string& source);

struct CompileSet {
    /// Dependencies before dependents.
    std::vector<std::string> order;
    std::set<std::string> unresolved;
    /// Strongly connected groups of two or more files (or self-imports).
    std::vector<std::vector<std::string>> cycles;
    std::vector<std::string> warnings;
};

/// Resolves `import` against `from` inside the tree; nullopt when absent.
std::optional<std::string> resolve_import(const SourceTree& tree, const std::string& from, const std::string& import,
                                          const std::vector<std::pair<std::string, std::string>>& remappings = {});

CompileSet resolve_imports(const SourceTree& tree,
                           const std::vector<std::pair<std::string, std::string>>& remappings = {});

/// Parses an Etherscan getsourcecode result entry into files and the entry
/// file name. Throws UnverifiedContract for an empty SourceCode.
std::pair<std::map<std::string, std::string>, std::string> unpack_etherscan_source(const nlohmann::json& result,
                                                                                   const std::string& address);

} // namespace solsentry::ingest
