// SPDX-License-Identifier: Apache-2.0
#include "solsentry/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "solsentry/lexer.hpp"
#include "solsentry/parser.hpp"
#include "solsentry/rule_dsl.hpp"
#include "solsentry/util.hpp"

namespace solsentry::corpus {

namespace fs = std::filesystem;

std::string_view label_name(Label l)
{
    return l == Label::Vulnerable ? "vulnerable" : "clean";
}

std::optional<Label> label_from_name(std::string_view s)
{
    if (s == "vulnerable") return Label::Vulnerable;
    if (s == "clean") return Label::Clean;
    return std::nullopt;
}

std::string_view provenance_name(Provenance p)
{
    switch (p) {
    case Provenance::Github: return "github";
    case Provenance::Etherscan: return "etherscan";
    case Provenance::Injected: return "injected";
    case Provenance::Handwritten: return "handwritten";
    }
    return "handwritten";
}

std::optional<Provenance> provenance_from_name(std::string_view s)
{
    for (auto p : {Provenance::Github, Provenance::Etherscan, Provenance::Injected, Provenance::Handwritten}) {
        if (provenance_name(p) == s) {
            return p;
        }
    }
    return std::nullopt;
}

std::string instance_snippet(const LabeledInstance& inst)
{
    if (inst.marked_span && inst.marked_span->end() <= inst.source.size()) {
        return inst.source.substr(inst.marked_span->offset, inst.marked_span->length);
    }
    return inst.source;
}

nlohmann::ordered_json sidecar_json(const LabeledInstance& inst)
{
    nlohmann::ordered_json j;
    j["id"] = inst.instance_id;
    j["swe_id"] = inst.swe_id;
    j["label"] = label_name(inst.label);
    if (inst.marked_span) {
        j["marked_span"] = {{"offset", inst.marked_span->offset}, {"length", inst.marked_span->length}};
    } else {
        j["marked_span"] = nullptr;
    }
    j["expected_condition"] = inst.expected_condition ? nlohmann::ordered_json(*inst.expected_condition) : nullptr;
    j["provenance"] = provenance_name(inst.provenance);
    return j;
}

LabeledInstance instance_from_sidecar(const nlohmann::json& meta, std::string source, const std::string& where)
{
    auto fail = [&](const std::string& why) { return MalformedInstance(where + ": " + why); };
    if (!meta.is_object()) {
        throw fail("sidecar must be a JSON object");
    }
    LabeledInstance inst;
    inst.source = std::move(source);
    if (!meta.contains("id") || !meta["id"].is_string()) throw fail("'id' must be text");
    if (!meta.contains("swe_id") || !meta["swe_id"].is_string()) throw fail("'swe_id' must be text");
    inst.instance_id = meta["id"].get<std::string>();
    inst.swe_id = meta["swe_id"].get<std::string>();
    auto label = label_from_name(meta.value("label", ""));
    if (!label) throw fail("'label' must be \"vulnerable\" or \"clean\"");
    inst.label = *label;
    auto prov = provenance_from_name(meta.value("provenance", "handwritten"));
    if (!prov) throw fail("unknown provenance");
    inst.provenance = *prov;
    if (meta.contains("marked_span") && !meta["marked_span"].is_null()) {
        const auto& s = meta["marked_span"];
        auto field = [&](const char* key) -> std::int64_t {
            if (!s.is_object() || !s.contains(key) || !s[key].is_number_integer() || s[key].get<std::int64_t>() < 0) {
                throw fail("'marked_span' must be {offset, length}");
            }
            return s[key].get<std::int64_t>();
        };
        const auto offset = field("offset");
        const auto length = field("length");
        if (offset + length > static_cast<std::int64_t>(inst.source.size())) {
            throw fail("'marked_span' lies outside the source");
        }
        inst.marked_span = Span{static_cast<std::uint32_t>(offset), static_cast<std::uint32_t>(length)};
    }
    if (inst.label == Label::Vulnerable && !inst.marked_span) {
        throw fail("vulnerable instance has no marked_span");
    }
    if (meta.contains("expected_condition") && !meta["expected_condition"].is_null()) {
        if (!meta["expected_condition"].is_string()) throw fail("'expected_condition' must be text");
        inst.expected_condition = meta["expected_condition"].get<std::string>();
        try {
            rules::parse_condition(*inst.expected_condition);
        } catch (const Error& e) {
            throw fail(std::string("expected_condition does not parse: ") + e.what());
        }
    }
    return inst;
}

std::string class_dir_name(std::string_view swe_id)
{
    std::string out;
    for (char c : swe_id) {
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::vector<LabeledInstance> load_corpus(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw Error("corpus directory not found: " + dir.string());
    }
    std::vector<fs::path> classes;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) classes.push_back(e.path());
    }
    std::sort(classes.begin(), classes.end());
    std::vector<LabeledInstance> out;
    for (const auto& cls : classes) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(cls)) {
            if (e.is_regular_file() && e.path().extension() == ".sol") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            fs::path meta_path = f;
            meta_path.replace_extension(".json");
            if (!fs::exists(meta_path)) {
                throw MalformedInstance(f.string() + ": missing sidecar " + meta_path.filename().string());
            }
            nlohmann::json meta;
            try {
                meta = nlohmann::json::parse(read_file(meta_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw MalformedInstance(meta_path.string() + ": " + e.what());
            }
            out.push_back(instance_from_sidecar(meta, read_file(f), meta_path.string()));
        }
    }
    return out;
}

void save_instance(const fs::path& dir, const LabeledInstance& inst)
{
    const fs::path cls = dir / class_dir_name(inst.swe_id);
    fs::create_directories(cls);
    write_file_atomic(cls / (inst.instance_id + ".sol"), inst.source);
    write_file_atomic(cls / (inst.instance_id + ".json"), sidecar_json(inst).dump(2) + "\n");
}

std::string dedup_key(std::string_view source)
{
    const std::string stripped = strip_comments(source);
    std::string out;
    bool pending_space = false;
    for (char c : stripped) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += c;
    }
    return out;
}

std::vector<LabeledInstance> dedup(const std::vector<LabeledInstance>& instances)
{
    std::unordered_set<std::string> seen;
    std::vector<LabeledInstance> out;
    for (const auto& inst : instances) {
        if (seen.insert(dedup_key(inst.source)).second) {
            out.push_back(inst);
        }
    }
    return out;
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound)
{
    if (bound == 0) {
        throw Error("bounded_draw: empty range");
    }
    // Reject the low values that would bias the modulo.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

namespace {

const std::vector<std::string>& contract_stems()
{
    static const std::vector<std::string> v{"Vault", "Ledger", "Escrow", "Treasury", "Pool",
                                            "Market", "Bank", "Store", "Reserve", "Wallet"};
    return v;
}

const std::vector<std::string>& function_stems()
{
    static const std::vector<std::string> v{"process", "settle", "update", "execute", "handle", "apply", "run", "commit"};
    return v;
}

std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    lines.push_back(cur);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    while (!lines.empty() && trim(lines.front()).empty()) lines.erase(lines.begin());
    for (auto& l : lines) {
        while (!l.empty() && std::isspace(static_cast<unsigned char>(l.back()))) l.pop_back();
    }
    return lines;
}

std::string benign_statement(std::mt19937_64& rng, std::size_t index)
{
    const std::uint64_t value = 1 + bounded_draw(rng, 97);
    switch (bounded_draw(rng, 3)) {
    case 0: return "uint256 aux" + std::to_string(index) + " = " + std::to_string(value) + ";";
    case 1: return "bool flag" + std::to_string(index) + " = " + (value % 2 ? "true" : "false") + ";";
    default: return "uint256 tally" + std::to_string(index) + " = " + std::to_string(value) + " * 2;";
    }
}

} // namespace

LabeledInstance inject(const InjectionRequest& req)
{
    std::mt19937_64 rng(req.seed);
    const auto lines = split_lines(req.snippet);
    if (lines.empty()) {
        throw InjectionUnparseable("empty snippet");
    }
    std::size_t indent = std::string::npos;
    for (const auto& l : lines) {
        if (trim(l).empty()) continue;
        indent = std::min(indent, l.find_first_not_of(" \t"));
    }

    const std::string contract_name =
        contract_stems()[bounded_draw(rng, contract_stems().size())] + std::to_string(bounded_draw(rng, 1000));
    const std::string fn_name =
        req.function_name ? *req.function_name : function_stems()[bounded_draw(rng, function_stems().size())];
    const std::size_t drawn_before = 1 + bounded_draw(rng, 2);
    const std::size_t before = req.leading_filler ? drawn_before : 0;
    const std::size_t after = bounded_draw(rng, 3);

    std::string src = "pragma solidity " + req.pragma + ";\n\ncontract " + contract_name + " {\n";
    for (const auto& decl : req.state_declarations) {
        src += "    " + decl + "\n";
    }
    if (!req.state_declarations.empty()) src += "\n";
    src += "    function " + fn_name + "(" + req.params.value_or("") + ") public" + (req.payable ? " payable" : "") +
           " {\n";
    std::size_t counter = 0;
    for (std::size_t i = 0; i < before; ++i) {
        src += "        " + benign_statement(rng, counter++) + "\n";
    }
    std::uint32_t mark_begin = 0;
    std::uint32_t mark_end = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string body = lines[i].size() > indent ? lines[i].substr(indent) : trim(lines[i]);
        src += "        ";
        if (i == 0) mark_begin = static_cast<std::uint32_t>(src.size());
        src += body;
        mark_end = static_cast<std::uint32_t>(src.size());
        src += "\n";
    }
    for (std::size_t i = 0; i < after; ++i) {
        src += "        " + benign_statement(rng, counter++) + "\n";
    }
    src += "    }\n";
    for (const auto& member : req.extra_members) {
        src += "\n    " + member + "\n";
    }
    src += "}\n";

    try {
        parse_source(src, req.instance_id);
    } catch (const Error& e) {
        throw InjectionUnparseable(std::string("injected source does not parse: ") + e.what());
    }

    LabeledInstance inst;
    inst.instance_id = req.instance_id;
    inst.source = std::move(src);
    inst.swe_id = req.swe_id;
    inst.label = req.label;
    inst.marked_span = Span{mark_begin, mark_end - mark_begin};
    inst.expected_condition = req.expected_condition;
    inst.provenance = Provenance::Injected;
    return inst;
}

std::vector<LabeledInstance> build_bundle(const nlohmann::json& bundle, const fs::path& base_dir)
{
    if (!bundle.is_object() || !bundle.contains("instances") || !bundle["instances"].is_array()) {
        throw MalformedInstance("bundle: expected {\"instances\": [...]}");
    }
    const std::string pragma = bundle.value("pragma", "^0.5.0");
    std::vector<LabeledInstance> out;
    for (const auto& e : bundle["instances"]) {
        const std::string id = e.value("id", "");
        auto fail = [&](const std::string& why) { return MalformedInstance("bundle entry '" + id + "': " + why); };
        if (id.empty()) throw MalformedInstance("bundle entry without id");
        const auto label = label_from_name(e.value("label", "vulnerable"));
        if (!label) throw fail("bad label");
        std::optional<std::string> expected;
        if (e.contains("expected_condition") && e["expected_condition"].is_string()) {
            expected = e["expected_condition"].get<std::string>();
        }
        LabeledInstance inst;
        if (e.contains("snippet")) {
            InjectionRequest req;
            req.instance_id = id;
            req.swe_id = e.value("swe_id", "");
            req.snippet = e["snippet"].get<std::string>();
            req.seed = e.value("seed", std::uint64_t{0});
            req.label = *label;
            if (e.contains("function")) req.function_name = e["function"].get<std::string>();
            if (e.contains("params")) req.params = e["params"].get<std::string>();
            req.payable = e.value("payable", false);
            req.leading_filler = e.value("leading_filler", true);
            req.state_declarations = e.value("state", std::vector<std::string>{});
            req.extra_members = e.value("members", std::vector<std::string>{});
            req.pragma = e.value("pragma", pragma);
            req.expected_condition = expected;
            inst = inject(req);
        } else {
            std::string source;
            if (e.contains("source_file")) {
                source = read_file(base_dir / e["source_file"].get<std::string>());
            } else if (e.contains("source")) {
                source = e["source"].get<std::string>();
            } else {
                throw fail("needs snippet, source or source_file");
            }
            try {
                parse_source(source, id);
            } catch (const Error& err) {
                throw fail(std::string("source does not parse: ") + err.what());
            }
            inst.instance_id = id;
            inst.swe_id = e.value("swe_id", "");
            inst.label = *label;
            inst.expected_condition = expected;
            auto prov = provenance_from_name(e.value("provenance", "handwritten"));
            if (!prov) throw fail("bad provenance");
            inst.provenance = *prov;
            if (e.contains("mark")) {
                const std::string mark = e["mark"].get<std::string>();
                const auto pos = source.find(mark);
                if (mark.empty() || pos == std::string::npos) throw fail("mark text not found in source");
                inst.marked_span = Span{static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(mark.size())};
            }
            inst.source = std::move(source);
        }
        if (inst.label == Label::Vulnerable && !inst.marked_span) throw fail("vulnerable entry needs a mark");
        out.push_back(std::move(inst));
    }
    return out;
}

DatasetSplit split(const std::vector<LabeledInstance>& instances, std::size_t train_n, std::uint64_t seed)
{
    if (train_n > instances.size()) {
        throw InsufficientInstances("requested " + std::to_string(train_n) + " training instances but only " +
                                    std::to_string(instances.size()) + " are available");
    }
    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[bounded_draw(rng, i)]);
    }
    DatasetSplit out;
    out.split_seed = seed;
    out.total = instances.size();
    out.train_n = train_n;
    out.test_n = instances.size() - train_n;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < train_n ? out.train : out.test).push_back(instances[order[i]]);
    }
    return out;
}

void export_jsonl(const std::vector<LabeledInstance>& train, const rulegen::PromptTemplate& tmpl, std::ostream& out)
{
    for (const auto& inst : train) {
        if (!inst.expected_condition) throw MissingExpectedCondition(inst.instance_id);
    }
    for (const auto& inst : train) {
        auto messages = rulegen::build_prompt(tmpl, instance_snippet(inst));
        messages.push_back({"assistant", *inst.expected_condition});
        nlohmann::ordered_json line;
        line["messages"] = rulegen::messages_to_json(messages);
        out << line.dump() << '\n';
    }
}

void export_jsonl(const std::vector<LabeledInstance>& train, const rulegen::PromptTemplate& tmpl, const fs::path& path)
{
    std::ostringstream buf;
    export_jsonl(train, tmpl, buf);
    write_file_atomic(path, buf.str());
}

std::optional<MatchMode> match_mode_from_name(std::string_view s)
{
    if (s == "syntactic") return MatchMode::Syntactic;
    if (s == "logical") return MatchMode::Logical;
    return std::nullopt;
}

std::string_view match_mode_name(MatchMode m)
{
    return m == MatchMode::Syntactic ? "syntactic" : "logical";
}

std::string normalize_condition_text(std::string_view text)
{
    std::string kept;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).rfind("```", 0) == 0) continue;
        kept += line;
        kept += '\n';
    }
    std::string out;
    bool pending_space = false;
    for (char c : kept) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += c;
    }
    return out;
}

bool exact_match(std::string_view generated, std::string_view expected, MatchMode mode)
{
    const std::string g = normalize_condition_text(generated);
    const std::string e = normalize_condition_text(expected);
    if (mode == MatchMode::Logical) {
        try {
            return rules::canonicalize(rules::parse_condition(g)) == rules::canonicalize(rules::parse_condition(e));
        } catch (const Error&) {
            // Fall through to the textual comparison.
        }
    }
    return g == e;
}

double round1(double value)
{
    return std::round(value * 10.0) / 10.0;
}

EmReport evaluate(const std::vector<std::pair<std::string, std::string>>& pairs, MatchMode mode)
{
    if (pairs.empty()) throw EmptyEvaluation();
    EmReport r{mode, pairs.size(), 0, 0};
    for (const auto& [g, e] : pairs) {
        if (exact_match(g, e, mode)) ++r.matches;
    }
    // Scale by 1000 before rounding so the tenth digit comes from exact integer ratios.
    r.score = std::round(1000.0 * static_cast<double>(r.matches) / static_cast<double>(r.total)) / 10.0;
    return r;
}

double em_score(const std::vector<std::pair<std::string, std::string>>& pairs, MatchMode mode)
{
    return evaluate(pairs, mode).score;
}

nlohmann::ordered_json em_report_json(const EmReport& r)
{
    nlohmann::ordered_json j;
    j["mode"] = match_mode_name(r.mode);
    j["total"] = r.total;
    j["matches"] = r.matches;
    j["score"] = r.score;
    return j;
}

std::vector<std::pair<std::string, std::string>> load_pairs(const fs::path& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("pairs file " + path.string() + ": " + e.what());
    }
    if (doc.is_object() && doc.contains("pairs")) doc = doc["pairs"];
    if (!doc.is_array()) throw Error("pairs file " + path.string() + ": expected a JSON array");
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& item : doc) {
        if (item.is_object() && item.contains("generated") && item.contains("expected") &&
            item["generated"].is_string() && item["expected"].is_string()) {
            out.emplace_back(item["generated"].get<std::string>(), item["expected"].get<std::string>());
        } else if (item.is_array() && item.size() == 2 && item[0].is_string() && item[1].is_string()) {
            out.emplace_back(item[0].get<std::string>(), item[1].get<std::string>());
        } else {
            throw Error("pairs file " + path.string() + ": each pair needs text 'generated' and 'expected'");
        }
    }
    return out;
}

} // namespace solsentry::corpus
