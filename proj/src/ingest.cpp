// SPDX-License-Identifier: Apache-2.0
#include "solsentry/ingest.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <regex>

#include "solsentry/lexer.hpp"
#include "solsentry/util.hpp"

namespace solsentry::ingest {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kBranchTtlSeconds = 24 * 60 * 60;

std::string redact_key(std::string text, const std::optional<std::string>& key)
{
    if (!key || key->empty()) return text;
    for (auto pos = text.find(*key); pos != std::string::npos; pos = text.find(*key, pos)) {
        text.replace(pos, key->size(), "[REDACTED]");
    }
    return text;
}

std::int64_t system_now()
{
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string normalize_key(const fs::path& p)
{
    std::string s = p.lexically_normal().generic_string();
    while (s.rfind("./", 0) == 0) s.erase(0, 2);
    return s;
}

std::string parent_key(const std::string& key)
{
    return fs::path(key).parent_path().generic_string();
}

bool is_relative_import(const std::string& p)
{
    return p.rfind("./", 0) == 0 || p.rfind("../", 0) == 0;
}

std::optional<int> retry_after(const HttpResponse& res)
{
    auto it = res.headers.find("retry-after");
    if (it == res.headers.end()) return std::nullopt;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void check_status(const HttpResponse& res, const std::string& what)
{
    if (res.status == 200) return;
    if (res.status == 404) throw NotFound(what + " not found");
    if (res.status == 429) throw RateLimited(what + ": rate limited", retry_after(res));
    if (res.status == 403) {
        auto it = res.headers.find("x-ratelimit-remaining");
        if (it != res.headers.end() && it->second == "0") throw RateLimited(what + ": rate limited", retry_after(res));
    }
    throw Error(what + ": HTTP " + std::to_string(res.status));
}

struct GithubTarget {
    std::string owner;
    std::string repo;
    std::string rev = "HEAD";
    std::string path;
    bool single_file = false;
};

std::vector<std::string> split_path(const std::string& s)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

std::string join_from(const std::vector<std::string>& parts, std::size_t from)
{
    std::string out;
    for (std::size_t i = from; i < parts.size(); ++i) {
        if (!out.empty()) out += '/';
        out += parts[i];
    }
    return out;
}

GithubTarget parse_github(const std::string& url)
{
    auto [base, path] = split_url(url);
    if (auto q = path.find_first_of("?#"); q != std::string::npos) path.erase(q);
    const auto parts = split_path(path);
    GithubTarget t;
    if (base.find("raw.githubusercontent.com") != std::string::npos) {
        if (parts.size() < 4) throw Error("unsupported GitHub raw URL: " + url);
        t.owner = parts[0];
        t.repo = parts[1];
        t.rev = parts[2];
        t.path = join_from(parts, 3);
        t.single_file = true;
        return t;
    }
    if (parts.size() < 2) throw Error("unsupported GitHub URL: " + url);
    t.owner = parts[0];
    t.repo = parts[1];
    if (t.repo.size() > 4 && t.repo.substr(t.repo.size() - 4) == ".git") t.repo.resize(t.repo.size() - 4);
    if (parts.size() >= 4 && (parts[2] == "blob" || parts[2] == "tree")) {
        t.rev = parts[3];
        t.path = join_from(parts, 4);
        t.single_file = parts[2] == "blob";
    } else if (parts.size() > 2) {
        throw Error("unsupported GitHub URL: " + url);
    }
    return t;
}

bool pinned_revision(const std::string& rev)
{
    return rev.size() == 40 && std::all_of(rev.begin(), rev.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string raw_url(const GithubTarget& t, const std::string& path)
{
    return "https://raw.githubusercontent.com/" + t.owner + "/" + t.repo + "/" + t.rev + "/" + path;
}

HttpHeaders github_headers(const FetchOptions& o)
{
    HttpHeaders h{{"User-Agent", "solsentry"}};
    if (o.github_token) h["Authorization"] = "token " + *o.github_token;
    return h;
}

std::string etherscan_base(const std::string& network)
{
    if (network == "mainnet") return "https://api.etherscan.io/api";
    return "https://api-" + network + ".etherscan.io/api";
}

std::string apply_remapping(const std::string& import,
                            const std::vector<std::pair<std::string, std::string>>& remappings)
{
    std::size_t best = 0;
    std::string out = import;
    for (const auto& [prefix, target] : remappings) {
        if (import.rfind(prefix, 0) == 0 && prefix.size() > best) {
            best = prefix.size();
            out = target + import.substr(prefix.size());
        }
    }
    return out;
}

/// Candidate keys for an import in order of preference.
std::vector<std::string> import_candidates(const std::string& from, const std::string& import,
                                           const std::vector<std::pair<std::string, std::string>>& remappings)
{
    if (is_relative_import(import)) {
        return {normalize_key(fs::path(parent_key(from)) / import)};
    }
    std::vector<std::string> out;
    const std::string remapped = apply_remapping(import, remappings);
    out.push_back(normalize_key(remapped));
    if (remapped == import) {
        for (const char* root : {"node_modules/", "lib/", "contracts/"}) {
            out.push_back(normalize_key(std::string(root) + import));
        }
    }
    return out;
}

/// Breadth-first fetch of a file and everything it imports. Each import
/// takes the first candidate key that exists or loads.
void follow_imports(SourceTree& tree, const std::string& entry_key,
                    const std::function<std::optional<std::string>(const std::string&)>& load,
                    const std::vector<std::pair<std::string, std::string>>& remappings)
{
    std::set<std::string> missing;
    auto present = [&](const std::string& key) {
        if (tree.files.contains(key)) return true;
        if (missing.contains(key)) return false;
        if (auto text = load(key)) {
            tree.files[key] = std::move(*text);
            return true;
        }
        missing.insert(key);
        return false;
    };
    std::deque<std::string> queue{entry_key};
    std::set<std::string> visited;
    while (!queue.empty()) {
        const std::string key = queue.front();
        queue.pop_front();
        if (!visited.insert(key).second || !present(key)) continue;
        for (const auto& imp : import_paths(tree.files[key])) {
            for (const auto& cand : import_candidates(key, imp, remappings)) {
                if (present(cand)) {
                    queue.push_back(cand);
                    break;
                }
            }
        }
    }
}

SourceTree fetch_local(const fs::path& path, const FetchOptions& o)
{
    SourceTree tree;
    tree.origin = {OriginKind::Local, path.string(), ""};
    if (fs::is_directory(path)) {
        for (const auto& e : fs::recursive_directory_iterator(path)) {
            if (e.is_regular_file() && e.path().extension() == ".sol") {
                tree.files[normalize_key(fs::relative(e.path(), path))] = read_file(e.path());
            }
        }
        if (!tree.files.empty()) tree.entry_file = tree.files.begin()->first;
        return tree;
    }
    const fs::path root = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    tree.entry_file = path.filename().string();
    follow_imports(
        tree, tree.entry_file,
        [&](const std::string& key) -> std::optional<std::string> {
            const fs::path p = root / key;
            if (fs::is_regular_file(p)) return read_file(p);
            return std::nullopt;
        },
        o.remappings);
    return tree;
}

SourceTree fetch_github(const std::string& url, HttpClient& client, const FetchOptions& o)
{
    const GithubTarget t = parse_github(url);
    SourceTree tree;
    tree.origin = {OriginKind::Github, "https://github.com/" + t.owner + "/" + t.repo, t.rev};
    const auto headers = github_headers(o);
    if (t.single_file) {
        tree.entry_file = normalize_key(t.path);
        auto first = client.get(raw_url(t, tree.entry_file), headers);
        check_status(first, url);
        tree.files[tree.entry_file] = first.body;
        follow_imports(
            tree, tree.entry_file,
            [&](const std::string& key) -> std::optional<std::string> {
                if (key.rfind("../", 0) == 0) return std::nullopt;
                auto res = client.get(raw_url(t, key), headers);
                if (res.status == 404) return std::nullopt;
                check_status(res, raw_url(t, key));
                return res.body;
            },
            o.remappings);
        return tree;
    }
    const std::string api =
        "https://api.github.com/repos/" + t.owner + "/" + t.repo + "/git/trees/" + t.rev + "?recursive=1";
    auto listing = client.get(api, headers);
    check_status(listing, url);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(listing.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("GitHub tree listing is not JSON: " + std::string(e.what()));
    }
    const std::string prefix = t.path.empty() ? "" : t.path + "/";
    for (const auto& item : doc.value("tree", nlohmann::json::array())) {
        const std::string p = item.value("path", "");
        if (item.value("type", "") != "blob" || fs::path(p).extension() != ".sol" || p.rfind(prefix, 0) != 0) continue;
        auto res = client.get(raw_url(t, p), headers);
        check_status(res, raw_url(t, p));
        tree.files[p] = res.body;
    }
    if (tree.files.empty()) throw NotFound(url + " contains no .sol files");
    tree.entry_file = tree.files.begin()->first;
    return tree;
}

SourceTree fetch_etherscan(const std::string& address, HttpClient& client, const FetchOptions& o)
{
    std::string url = etherscan_base(o.network) + "?module=contract&action=getsourcecode&address=" + address;
    if (o.etherscan_key) url += "&apikey=" + *o.etherscan_key;
    HttpResponse res;
    try {
        res = client.get(url, {});
    } catch (const NetworkError& e) {
        throw NetworkError(redact_key(e.what(), o.etherscan_key));
    }
    check_status(res, "etherscan " + address);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("etherscan response is not JSON: " + std::string(e.what()));
    }
    const auto& result = doc.contains("result") ? doc["result"] : nlohmann::json();
    if (doc.value("status", "0") != "1") {
        const std::string msg = result.is_string() ? result.get<std::string>() : doc.value("message", "error");
        std::string lower = msg;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (lower.find("rate limit") != std::string::npos) throw RateLimited("etherscan: " + msg, retry_after(res));
        if (lower.find("invalid address") != std::string::npos) throw NotFound("etherscan: " + msg);
        throw Error("etherscan: " + msg);
    }
    if (!result.is_array() || result.empty()) throw NotFound("etherscan returned no entry for " + address);
    auto [files, entry] = unpack_etherscan_source(result[0], address);
    SourceTree tree;
    tree.origin = {OriginKind::Etherscan, address, o.network};
    tree.files = std::move(files);
    tree.entry_file = entry;
    return tree;
}

std::string cache_key(const std::string& kind, const std::string& target, const std::string& detail)
{
    return sha256_hex(kind + "\n" + target + "\n" + detail);
}

} // namespace

std::string_view origin_kind_name(OriginKind k)
{
    switch (k) {
    case OriginKind::Local: return "local";
    case OriginKind::Github: return "github";
    case OriginKind::Etherscan: return "etherscan";
    }
    return "local";
}

nlohmann::ordered_json tree_to_json(const SourceTree& tree)
{
    nlohmann::ordered_json j;
    j["entry_file"] = tree.entry_file;
    j["origin"] = {{"kind", origin_kind_name(tree.origin.kind)},
                   {"location", tree.origin.location},
                   {"detail", tree.origin.detail}};
    j["fetched_at"] = tree.fetched_at;
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& [k, v] : tree.files) files[k] = v;
    j["files"] = std::move(files);
    j["unresolved"] = tree.unresolved;
    return j;
}

SourceTree tree_from_json(const nlohmann::json& j)
{
    SourceTree t;
    t.entry_file = j.at("entry_file").get<std::string>();
    const auto& o = j.at("origin");
    const std::string kind = o.at("kind").get<std::string>();
    t.origin.kind = kind == "github" ? OriginKind::Github : kind == "etherscan" ? OriginKind::Etherscan : OriginKind::Local;
    t.origin.location = o.at("location").get<std::string>();
    t.origin.detail = o.at("detail").get<std::string>();
    t.fetched_at = j.at("fetched_at").get<std::int64_t>();
    for (const auto& [k, v] : j.at("files").items()) t.files[k] = v.get<std::string>();
    for (const auto& u : j.value("unresolved", nlohmann::json::array())) t.unresolved.insert(u.get<std::string>());
    return t;
}

HttpResponse LiveHttpClient::get(const std::string& url, const HttpHeaders& headers)
{
    return http_get(url, headers, timeout_);
}

FixtureHttpClient::FixtureHttpClient(fs::path dir) : dir_(std::move(dir))
{
    const fs::path idx = dir_ / "index.json";
    if (!fs::exists(idx)) throw Error("fixture directory " + dir_.string() + " has no index.json");
    index_ = nlohmann::json::parse(read_file(idx));
}

std::string strip_credentials(const std::string& url)
{
    static const std::regex key_param(R"(([?&])apikey=[^&#]*&?)");
    std::string out = std::regex_replace(url, key_param, "$1");
    while (!out.empty() && (out.back() == '&' || out.back() == '?')) out.pop_back();
    return out;
}

HttpResponse FixtureHttpClient::get(const std::string& url, const HttpHeaders&)
{
    const std::string key = strip_credentials(url);
    requested_.push_back(key);
    if (!index_.contains(key)) {
        return {404, "", {}};
    }
    const auto& e = index_[key];
    HttpResponse res;
    res.status = e.value("status", 200);
    if (e.contains("body_file")) {
        res.body = read_file(dir_ / e["body_file"].get<std::string>());
    } else if (e.contains("body")) {
        res.body = e["body"].is_string() ? e["body"].get<std::string>() : e["body"].dump();
    }
    const nlohmann::json headers = e.value("headers", nlohmann::json::object());
    for (const auto& [k, v] : headers.items()) {
        std::string name = k;
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        res.headers[name] = v.get<std::string>();
    }
    return res;
}

TargetKind classify_target(const std::string& target)
{
    static const std::regex address(R"(^0x[0-9a-fA-F]{40}$)");
    if (std::regex_match(target, address)) return TargetKind::Address;
    if (target.rfind("http://", 0) == 0 || target.rfind("https://", 0) == 0) {
        auto host = split_url(target).first;
        if (host.find("github.com") != std::string::npos || host.find("githubusercontent.com") != std::string::npos) {
            return TargetKind::Github;
        }
        throw Error("unsupported remote target: " + target);
    }
    return TargetKind::Local;
}

std::pair<std::map<std::string, std::string>, std::string> unpack_etherscan_source(const nlohmann::json& result,
                                                                                   const std::string& address)
{
    const std::string code = result.value("SourceCode", "");
    const std::string name = result.value("ContractName", "");
    if (trim(code).empty()) throw UnverifiedContract(address);
    std::map<std::string, std::string> files;
    std::string text = trim(code);
    if (text.rfind("{", 0) == 0) {
        // Standard-JSON input arrives wrapped in an extra pair of braces.
        if (text.rfind("{{", 0) == 0 && text.size() >= 4 && text.substr(text.size() - 2) == "}}") {
            text = text.substr(1, text.size() - 2);
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error("etherscan source for " + address + " is not valid JSON: " + e.what());
        }
        const auto& sources = doc.contains("sources") ? doc["sources"] : doc;
        for (const auto& [path, entry] : sources.items()) {
            if (entry.is_object() && entry.contains("content")) {
                files[normalize_key(path)] = entry["content"].get<std::string>();
            }
        }
        if (files.empty()) throw Error("etherscan source for " + address + " lists no files");
    } else {
        files[(name.empty() ? "Contract" : name) + ".sol"] = code;
    }
    std::string entry = files.begin()->first;
    if (!name.empty()) {
        const std::regex decl("\\b(contract|library|interface)\\s+" + name + "\\b");
        for (const auto& [path, content] : files) {
            if (std::regex_search(content, decl)) {
                entry = path;
                break;
            }
        }
    }
    return {files, entry};
}

std::vector<std::string> import_paths(const std::string& source)
{
    static const std::regex re(R"re(\bimport\s+(?:[^;"']*?\bfrom\s+)?["']([^"']+)["'])re");
    std::vector<std::string> out;
    const std::string text = strip_comments(source);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        out.push_back((*it)[1].str());
    }
    return out;
}

std::optional<std::string> resolve_import(const SourceTree& tree, const std::string& from, const std::string& import,
                                          const std::vector<std::pair<std::string, std::string>>& remappings)
{
    for (const auto& cand : import_candidates(from, import, remappings)) {
        if (tree.files.contains(cand)) return cand;
    }
    return std::nullopt;
}

CompileSet resolve_imports(const SourceTree& tree, const std::vector<std::pair<std::string, std::string>>& remappings)
{
    CompileSet out;
    std::map<std::string, std::vector<std::string>> deps;
    for (const auto& [path, text] : tree.files) {
        auto& d = deps[path];
        for (const auto& imp : import_paths(text)) {
            if (auto r = resolve_import(tree, path, imp, remappings)) {
                if (std::find(d.begin(), d.end(), *r) == d.end()) d.push_back(*r);
            } else {
                out.unresolved.insert(imp);
                out.warnings.push_back(path + ": unresolved import \"" + imp + "\"");
            }
        }
    }

    // Tarjan: an SCC is closed only after everything it reaches, so emitting
    // in completion order puts dependencies first.
    std::map<std::string, int> index;
    std::map<std::string, int> low;
    std::set<std::string> on_stack;
    std::vector<std::string> stack;
    int counter = 0;
    std::function<void(const std::string&)> visit = [&](const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (const auto& w : deps[v]) {
            if (!index.contains(w)) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack.contains(w)) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] != index[v]) return;
        std::vector<std::string> scc;
        for (;;) {
            std::string w = stack.back();
            stack.pop_back();
            on_stack.erase(w);
            scc.push_back(w);
            if (w == v) break;
        }
        std::sort(scc.begin(), scc.end(), [&](const auto& a, const auto& b) { return index[a] < index[b]; });
        const auto& self = deps[v];
        if (scc.size() > 1 || std::find(self.begin(), self.end(), v) != self.end()) {
            std::string members;
            for (const auto& m : scc) members += (members.empty() ? "" : ", ") + m;
            out.warnings.push_back("import cycle: " + members);
            out.cycles.push_back(scc);
        }
        out.order.insert(out.order.end(), scc.begin(), scc.end());
    };
    if (tree.files.contains(tree.entry_file)) visit(tree.entry_file);
    for (const auto& [path, _] : tree.files) {
        if (!index.contains(path)) visit(path);
    }
    return out;
}

SourceTree fetch(const std::string& target, const FetchOptions& options)
{
    const auto now = options.now ? options.now : system_now;
    const TargetKind kind = classify_target(target);
    if (kind == TargetKind::Local) {
        if (!fs::exists(target)) throw NotFound("no such file or directory: " + target);
        SourceTree tree = fetch_local(target, options);
        tree.fetched_at = now();
        tree.unresolved = resolve_imports(tree, options.remappings).unresolved;
        return tree;
    }

    std::string detail;
    bool pinned = true;
    if (kind == TargetKind::Github) {
        const auto gh = parse_github(target);
        detail = gh.rev;
        pinned = pinned_revision(gh.rev);
    } else {
        detail = options.network;
    }
    std::optional<fs::path> cache_file;
    if (options.cache_dir) {
        cache_file = *options.cache_dir / (cache_key(kind == TargetKind::Github ? "github" : "etherscan", target, detail) + ".json");
        if (fs::exists(*cache_file)) {
            try {
                SourceTree cached = tree_from_json(nlohmann::json::parse(read_file(*cache_file)));
                if (pinned || options.offline || now() - cached.fetched_at < kBranchTtlSeconds) {
                    return cached;
                }
            } catch (const std::exception&) {
                // A corrupt entry is refetched.
            }
        }
    }

    std::shared_ptr<HttpClient> client = options.client;
    if (!client) client = std::make_shared<LiveHttpClient>();
    if (options.offline && client->is_network()) {
        throw NetworkDisabled("offline mode and " + target + " is not cached");
    }
    SourceTree tree = kind == TargetKind::Github ? fetch_github(target, *client, options)
                                                 : fetch_etherscan(target, *client, options);
    tree.fetched_at = now();
    tree.unresolved = resolve_imports(tree, options.remappings).unresolved;
    if (cache_file) {
        fs::create_directories(cache_file->parent_path());
        write_file_atomic(*cache_file, tree_to_json(tree).dump(2) + "\n");
    }
    return tree;
}

} // namespace solsentry::ingest
