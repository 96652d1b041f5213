// SPDX-License-Identifier: Apache-2.0
#include "solsentry/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "solsentry/ast_json.hpp"
#include "solsentry/backend.hpp"
#include "solsentry/cfg.hpp"
#include "solsentry/config.hpp"
#include "solsentry/corpus.hpp"
#include "solsentry/detectors.hpp"
#include "solsentry/ingest.hpp"
#include "solsentry/parser.hpp"
#include "solsentry/rule_store.hpp"
#include "solsentry/rulegen.hpp"
#include "solsentry/util.hpp"

#ifndef SOLSENTRY_VERSION
#define SOLSENTRY_VERSION "0.0.0"
#endif

namespace solsentry {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Failure that maps to exit code 2 with a specific error kind.
class UsageError : public Error {
public:
    using Error::Error;
};

std::string error_kind(const std::exception& e)
{
    if (dynamic_cast<const UsageError*>(&e)) return "UsageError";
    if (dynamic_cast<const SyntaxError*>(&e)) return "SyntaxError";
    if (dynamic_cast<const UnsupportedConstruct*>(&e)) return "UnsupportedConstruct";
    if (dynamic_cast<const MalformedAst*>(&e)) return "MalformedAst";
    if (dynamic_cast<const DuplicateDetectorId*>(&e)) return "DuplicateDetectorId";
    if (dynamic_cast<const rules::MalformedRuleFile*>(&e)) return "MalformedRuleFile";
    if (dynamic_cast<const rules::RuleSyntaxError*>(&e)) return "RuleSyntaxError";
    if (dynamic_cast<const rulegen::BackendUnavailable*>(&e)) return "BackendUnavailable";
    if (dynamic_cast<const rulegen::EmptyResponse*>(&e)) return "EmptyResponse";
    if (dynamic_cast<const rulegen::RejectedCandidate*>(&e)) return "RejectedCandidate";
    if (dynamic_cast<const corpus::InjectionUnparseable*>(&e)) return "InjectionUnparseable";
    if (dynamic_cast<const corpus::InsufficientInstances*>(&e)) return "InsufficientInstances";
    if (dynamic_cast<const corpus::MissingExpectedCondition*>(&e)) return "MissingExpectedCondition";
    if (dynamic_cast<const corpus::EmptyEvaluation*>(&e)) return "EmptyEvaluation";
    if (dynamic_cast<const corpus::MalformedInstance*>(&e)) return "MalformedInstance";
    if (dynamic_cast<const ingest::NotFound*>(&e)) return "NotFound";
    if (dynamic_cast<const ingest::RateLimited*>(&e)) return "RateLimited";
    if (dynamic_cast<const ingest::UnverifiedContract*>(&e)) return "UnverifiedContract";
    if (dynamic_cast<const ingest::NetworkDisabled*>(&e)) return "NetworkDisabled";
    if (dynamic_cast<const NetworkError*>(&e)) return "NetworkError";
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return "FilesystemError";
    return "InternalError";
}

std::optional<std::string> real_env(const char* name)
{
    return env(name);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string sanitize_file_name(const std::string& s)
{
    std::string out;
    for (char c : s) {
        out += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_' ? c : '_';
    }
    return out;
}

struct GlobalOptions {
    std::string config_file;
    std::string format;
    std::string rules_dir;
    std::string cache_dir;
    bool verbose = false;
};

class Cli {
public:
    Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(const std::vector<std::string>& args);

private:
    std::ostream& out_;
    std::ostream& err_;
    GlobalOptions global_;
    std::optional<CliConfig> config_;
    bool json_ = false;

    // scan
    std::vector<std::string> scan_targets_;
    int scan_jobs_ = -1;
    std::vector<std::string> enable_ids_;
    std::vector<std::string> disable_ids_;
    bool no_pragma_gate_ = false;
    bool no_mint_check_ = false;
    bool offline_ = false;
    std::string network_;
    std::string emit_cfg_;
    std::string http_fixtures_;

    // gen
    std::string swe_id_;
    std::string corpus_dir_;
    std::string template_name_;
    std::string backend_;
    std::string fixture_dir_;
    int max_attempts_ = 0;
    std::optional<double> threshold_;
    std::optional<std::uint64_t> seed_;
    std::string model_;

    // rules
    std::string rule_file_;
    std::string rule_id_arg_;

    // dataset
    std::string out_path_;
    std::size_t train_n_ = 112;
    std::uint64_t split_seed_ = 42;
    std::string bundle_file_;
    std::string snippet_;
    std::string snippet_file_;
    std::string inject_id_ = "injected";
    std::string label_ = "vulnerable";
    std::string function_name_;
    std::string params_;
    bool payable_ = false;
    bool no_leading_filler_ = false;
    std::vector<std::string> state_decls_;
    std::vector<std::string> members_;
    std::string pragma_ = "^0.5.0";
    std::string expected_;

    // eval
    std::string pairs_file_;
    std::string mode_ = "logical";

    // fetch / ast
    std::string target_;
    bool ast_print_ = false;

    void prepare_config();
    std::string effective_corpus_dir() const;
    Registry build_registry();
    ScanOptions scan_options() const;
    ingest::FetchOptions fetch_options();
    std::vector<corpus::LabeledInstance> class_instances(const std::string& swe);
    std::unique_ptr<rulegen::LlmBackend> make_backend();

    int cmd_scan();
    int cmd_gen();
    int cmd_rules_list();
    int cmd_rules_validate(bool add);
    int cmd_rules_toggle(bool enable);
    int cmd_dataset_dedup();
    int cmd_dataset_split();
    int cmd_dataset_inject();
    int cmd_dataset_export();
    int cmd_dataset_build();
    int cmd_dataset_stats();
    int cmd_eval();
    int cmd_fetch();
    int cmd_config_show();
    int cmd_ast();

    void print_json(const json& j) { out_ << j.dump(2) << "\n"; }
    void warn(const std::string& message)
    {
        if (json_) {
            err_ << json{{"warning", message}}.dump() << "\n";
        } else {
            err_ << "warning: " << message << "\n";
        }
    }
    int fail(const std::exception& e)
    {
        if (json_) {
            json j;
            j["error"] = {{"kind", error_kind(e)}, {"message", e.what()}};
            if (const auto* rl = dynamic_cast<const ingest::RateLimited*>(&e); rl && rl->retry_after) {
                j["error"]["retry_after"] = *rl->retry_after;
            }
            err_ << j.dump() << "\n";
        } else {
            err_ << "solsentry: error: " << e.what();
            if (const auto* rl = dynamic_cast<const ingest::RateLimited*>(&e); rl && rl->retry_after) {
                err_ << " (retry after " << *rl->retry_after << "s)";
            }
            err_ << "\n";
        }
        return 2;
    }
};

void Cli::prepare_config()
{
    std::optional<fs::path> file;
    if (!global_.config_file.empty()) file = global_.config_file;
    config_ = CliConfig::load(file, real_env);
    if (!global_.format.empty()) config_->set("output.format", global_.format);
    if (!global_.rules_dir.empty()) config_->set("rules.dir", global_.rules_dir);
    if (!global_.cache_dir.empty()) config_->set("cache.dir", global_.cache_dir);
    const std::string& fmt = config_->get("output.format");
    if (fmt != "text" && fmt != "json") throw UsageError("output format must be text or json, got '" + fmt + "'");
    json_ = fmt == "json";
}

std::string Cli::effective_corpus_dir() const
{
    return corpus_dir_.empty() ? config_->get("corpus.dir") : corpus_dir_;
}

Registry Cli::build_registry()
{
    Registry reg = builtin_registry();
    rules::RuleStore store(config_->get("rules.dir"));
    store.load_into(reg);
    std::set<std::string> off;
    for (const auto& id : config_->get_list("detectors.disabled")) off.insert(id);
    for (const auto& id : store.disabled()) off.insert(id);
    for (const auto& id : off) reg.set_enabled(id, false);
    for (const auto& id : disable_ids_) {
        if (!reg.set_enabled(id, false)) throw UsageError("unknown detector id '" + id + "'");
    }
    for (const auto& id : enable_ids_) {
        if (!reg.set_enabled(id, true)) throw UsageError("unknown detector id '" + id + "'");
    }
    return reg;
}

ScanOptions Cli::scan_options() const
{
    ScanOptions o;
    o.pragma_gate = config_->get_bool("scan.pragma_gate") && !no_pragma_gate_;
    o.mint_check = config_->get_bool("scan.mint_check") && !no_mint_check_;
    return o;
}

ingest::FetchOptions Cli::fetch_options()
{
    ingest::FetchOptions o;
    o.offline = offline_ || config_->get_bool("ingest.offline");
    o.network = network_.empty() ? config_->get("ingest.network") : network_;
    if (const auto& c = config_->get("cache.dir"); !c.empty()) o.cache_dir = fs::path(c);
    if (const auto& k = config_->get("ingest.etherscan_key"); !k.empty()) o.etherscan_key = k;
    if (const auto& t = config_->get("ingest.github_token"); !t.empty()) o.github_token = t;
    const std::string fixtures = http_fixtures_.empty() ? config_->get("ingest.fixture_dir") : http_fixtures_;
    if (!fixtures.empty()) o.client = std::make_shared<ingest::FixtureHttpClient>(fixtures);
    return o;
}

std::vector<corpus::LabeledInstance> Cli::class_instances(const std::string& swe)
{
    std::vector<corpus::LabeledInstance> out;
    for (auto& inst : corpus::load_corpus(effective_corpus_dir())) {
        if (lower(inst.swe_id) == lower(swe)) out.push_back(std::move(inst));
    }
    if (out.empty()) throw Error("corpus " + effective_corpus_dir() + " has no instances of " + swe);
    return out;
}

std::unique_ptr<rulegen::LlmBackend> Cli::make_backend()
{
    std::string kind = backend_.empty() ? config_->get("backend.kind") : backend_;
    std::string dir = fixture_dir_.empty() ? config_->get("backend.fixture_dir") : fixture_dir_;
    if (auto colon = kind.find(':'); colon != std::string::npos) {
        dir = kind.substr(colon + 1);
        kind = kind.substr(0, colon);
    }
    if (kind == "fixture") {
        if (dir.empty()) throw UsageError("the fixture backend needs a directory (--fixture-dir or fixture:DIR)");
        return std::make_unique<rulegen::FixtureBackend>(fs::path(dir));
    }
    if (kind == "live") {
        rulegen::LiveBackendOptions o;
        o.endpoint = config_->get("backend.endpoint");
        o.model = model_.empty() ? config_->get("backend.model") : model_;
        o.api_key = config_->get("backend.key");
        if (global_.verbose) o.log = &err_;
        return std::make_unique<rulegen::RetryingBackend>(std::make_unique<rulegen::LiveBackend>(o),
                                                          config_->get_int("backend.retries"),
                                                          std::chrono::milliseconds(500));
    }
    throw UsageError("unknown backend '" + kind + "' (expected fixture or live)");
}

struct ScanJob {
    std::string file_id;
    std::string text;
};

struct ScanResult {
    std::vector<Finding> findings;
    std::optional<std::string> error;
};

int Cli::cmd_scan()
{
    Registry registry = build_registry();
    const ScanOptions options = scan_options();
    const auto fopts = fetch_options();

    std::vector<ScanJob> jobs;
    std::set<std::string> seen;
    for (const auto& target : scan_targets_) {
        const ingest::SourceTree tree = ingest::fetch(target, fopts);
        const auto set = ingest::resolve_imports(tree, fopts.remappings);
        for (const auto& w : set.warnings) warn(target + ": " + w);
        fs::path base;
        if (tree.origin.kind == ingest::OriginKind::Local) {
            base = fs::is_directory(target) ? fs::path(target) : fs::path(target).parent_path();
        }
        for (const auto& key : set.order) {
            std::string id = tree.origin.kind == ingest::OriginKind::Local
                                 ? (base / key).lexically_normal().generic_string()
                                 : key;
            if (seen.insert(id).second) jobs.push_back({id, tree.files.at(key)});
        }
    }

    int jobs_n = scan_jobs_ >= 0 ? scan_jobs_ : config_->get_int("scan.jobs");
    if (jobs_n <= 0) jobs_n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs_n = std::min<int>(jobs_n, static_cast<int>(std::max<std::size_t>(1, jobs.size())));

    std::vector<ScanResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    const std::string cfg_dir = emit_cfg_;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const SourceUnit unit = parse_source(jobs[i].text, jobs[i].file_id);
                results[i].findings = scan(unit, registry, options);
                if (!cfg_dir.empty()) {
                    for (const auto& n : unit.nodes()) {
                        if ((!n.is(NodeType::FunctionDefinition) && !n.is(NodeType::ModifierDefinition)) ||
                            !unit.child(n, "body")) {
                            continue;
                        }
                        const AstNode* c = unit.parent(n);
                        std::string name = sanitize_file_name(jobs[i].file_id) + "__" +
                                           (c ? c->attr_string("name") : "") + "." +
                                           (n.attr_string("name").empty() ? n.attr_string("kind") : n.attr_string("name")) +
                                           "." + std::to_string(n.id) + ".dot";
                        write_file_atomic(fs::path(cfg_dir) / name, to_dot(unit, build_cfg(unit, n)));
                    }
                }
            } catch (const std::exception& e) {
                results[i].error = jobs[i].file_id + ": " + e.what();
            }
        }
    };
    if (!cfg_dir.empty()) fs::create_directories(cfg_dir);
    std::vector<std::thread> threads;
    for (int t = 1; t < jobs_n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::vector<Finding> all;
    bool op_error = false;
    for (auto& r : results) {
        if (r.error) {
            op_error = true;
            if (json_) {
                err_ << json{{"error", {{"kind", "ScanError"}, {"message", *r.error}}}}.dump() << "\n";
            } else {
                err_ << "solsentry: error: " << *r.error << "\n";
            }
        }
        all.insert(all.end(), r.findings.begin(), r.findings.end());
    }
    std::sort(all.begin(), all.end(), finding_less);
    if (json_) {
        print_json(findings_to_json(all));
    } else {
        out_ << format_findings_text(all);
        out_ << all.size() << " finding" << (all.size() == 1 ? "" : "s") << " in " << jobs.size() << " file"
             << (jobs.size() == 1 ? "" : "s") << "\n";
    }
    if (op_error) return 2;
    return all.empty() ? 0 : 1;
}

int Cli::cmd_gen()
{
    rulegen::GenerationConfig gc;
    gc.acceptance_threshold = threshold_ ? *threshold_ : config_->get_double("gen.threshold");
    gc.max_attempts = max_attempts_ > 0 ? max_attempts_ : config_->get_int("gen.max_attempts");
    if (!(gc.acceptance_threshold > 0 && gc.acceptance_threshold <= 1)) {
        throw UsageError("--threshold must lie in (0, 1]");
    }
    if (gc.max_attempts < 1) throw UsageError("--max-attempts must be at least 1");
    const std::string tname = template_name_.empty() ? config_->get("gen.template") : template_name_;
    auto tid = rulegen::template_from_name(tname);
    if (!tid) throw UsageError("unknown template '" + tname + "'");
    gc.template_id = *tid;
    gc.seed = seed_ ? *seed_ : static_cast<std::uint64_t>(config_->get_int("gen.seed"));
    gc.model = model_.empty() ? config_->get("backend.model") : model_;

    const auto instances = class_instances(swe_id_);
    auto backend = make_backend();
    Registry registry = build_registry();
    rules::RuleStore store(config_->get("rules.dir"));
    const auto result = rulegen::run_loop(gc, *backend, swe_id_, instances, registry, store,
                                          effective_corpus_dir() + "#" + lower(swe_id_));

    if (json_) {
        json j;
        j["integrated"] = result.integrated;
        j["attempts"] = result.attempts;
        j["backend_calls"] = backend->calls();
        if (result.rule) {
            j["rule_id"] = result.rule->rule_id;
            j["rule_file"] = store.path_of(result.rule->rule_id).generic_string();
        }
        j["config"] = rulegen::config_json(gc);
        auto reports = json::array();
        for (const auto& r : result.reports) reports.push_back(rulegen::report_json(r));
        j["reports"] = std::move(reports);
        print_json(j);
    } else {
        for (const auto& r : result.reports) out_ << rulegen::format_report_text(r);
        if (result.rule) {
            out_ << "integrated " << result.rule->rule_id << " on attempt " << result.attempts << " -> "
                 << store.path_of(result.rule->rule_id).generic_string() << "\n";
        } else {
            out_ << "exhausted after " << result.attempts << " attempt" << (result.attempts == 1 ? "" : "s") << "\n";
        }
    }
    return result.integrated ? 0 : 1;
}

int Cli::cmd_rules_list()
{
    Registry registry = build_registry();
    if (json_) {
        auto arr = json::array();
        for (const auto* d : registry.descriptors()) {
            json j;
            j["detector_id"] = d->detector_id;
            j["swe_id"] = d->swe_id;
            j["origin"] = origin_name(d->origin);
            j["enabled"] = d->enabled;
            j["description"] = d->description;
            if (d->condition_text) j["condition"] = *d->condition_text;
            if (d->acceptance_accuracy) j["acceptance_accuracy"] = *d->acceptance_accuracy;
            arr.push_back(std::move(j));
        }
        print_json(arr);
        return 0;
    }
    for (const auto* d : registry.descriptors()) {
        out_ << d->detector_id << "  " << d->swe_id << "  " << origin_name(d->origin) << "  "
             << (d->enabled ? "enabled" : "disabled");
        if (d->acceptance_accuracy) out_ << "  accuracy " << std::fixed << std::setprecision(3) << *d->acceptance_accuracy;
        out_ << "\n";
    }
    return 0;
}

int Cli::cmd_rules_validate(bool add)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(rule_file_));
    } catch (const nlohmann::json::parse_error& e) {
        throw rules::MalformedRuleFile(rule_file_, e.what());
    }
    // A candidate's accuracy is recomputed below, so it may be left out.
    if (doc.is_object() && !doc.contains("acceptance_accuracy")) doc["acceptance_accuracy"] = 0.0;
    const auto rule = rules::rule_from_json(doc, rule_file_);
    const double threshold = threshold_ ? *threshold_ : config_->get_double("gen.threshold");
    if (!(threshold > 0 && threshold <= 1)) throw UsageError("--threshold must lie in (0, 1]");
    const auto report =
        rulegen::validate_candidate(rule.condition_text, class_instances(rule.swe_id), threshold, rule.rule_id);
    const bool accepted = report.decision == rulegen::Decision::Accepted;
    if (add && accepted) {
        Registry registry = build_registry();
        if (registry.contains(rule.rule_id)) throw DuplicateDetectorId(rule.rule_id);
        rules::RuleStore store(config_->get("rules.dir"));
        store.add(rules::make_rule(rule.rule_id, rule.swe_id, rule.condition_text, report.accuracy,
                                   rule.created_from, rule.origin_label));
    }
    if (json_) {
        json j = rulegen::report_json(report);
        if (add) j["added"] = accepted;
        print_json(j);
    } else {
        out_ << rulegen::format_report_text(report);
        if (add) out_ << (accepted ? "added " : "not added ") << rule.rule_id << "\n";
    }
    return accepted ? 0 : 1;
}

int Cli::cmd_rules_toggle(bool enable)
{
    Registry registry = build_registry();
    if (!registry.contains(rule_id_arg_)) throw UsageError("unknown detector id '" + rule_id_arg_ + "'");
    rules::RuleStore store(config_->get("rules.dir"));
    fs::create_directories(store.dir());
    store.set_disabled(rule_id_arg_, !enable);
    if (json_) {
        print_json({{"detector_id", rule_id_arg_}, {"enabled", enable}});
    } else {
        out_ << (enable ? "enabled " : "disabled ") << rule_id_arg_ << "\n";
    }
    return 0;
}

int Cli::cmd_dataset_dedup()
{
    const auto input = corpus::load_corpus(effective_corpus_dir());
    const auto kept = corpus::dedup(input);
    std::set<std::string> kept_ids;
    for (const auto& k : kept) kept_ids.insert(k.instance_id);
    std::vector<std::string> removed;
    for (const auto& i : input) {
        if (!kept_ids.contains(i.instance_id)) removed.push_back(i.instance_id);
    }
    if (!out_path_.empty()) {
        for (const auto& k : kept) corpus::save_instance(out_path_, k);
    }
    if (json_) {
        print_json({{"input", input.size()}, {"retained", kept.size()}, {"removed", removed}});
    } else {
        out_ << "input " << input.size() << ", retained " << kept.size() << "\n";
        for (const auto& r : removed) out_ << "removed " << r << "\n";
    }
    return 0;
}

int Cli::cmd_dataset_split()
{
    const auto all = corpus::load_corpus(effective_corpus_dir());
    const auto s = corpus::split(all, train_n_, split_seed_);
    json j;
    j["seed"] = s.split_seed;
    j["total"] = s.total;
    j["train_n"] = s.train_n;
    j["test_n"] = s.test_n;
    auto ids = [](const std::vector<corpus::LabeledInstance>& v) {
        std::vector<std::string> out;
        for (const auto& i : v) out.push_back(i.instance_id);
        return out;
    };
    j["train"] = ids(s.train);
    j["test"] = ids(s.test);
    if (!out_path_.empty()) write_file_atomic(out_path_, j.dump(2) + "\n");
    if (json_ || out_path_.empty()) {
        print_json(j);
    } else {
        out_ << "train " << s.train_n << ", test " << s.test_n << " (seed " << s.split_seed << ") -> " << out_path_
             << "\n";
    }
    return 0;
}

int Cli::cmd_dataset_inject()
{
    corpus::InjectionRequest req;
    req.instance_id = inject_id_;
    req.swe_id = swe_id_;
    if (!snippet_file_.empty()) {
        req.snippet = read_file(snippet_file_);
    } else if (!snippet_.empty()) {
        req.snippet = snippet_;
    } else {
        throw UsageError("inject needs --snippet or --snippet-file");
    }
    req.seed = seed_.value_or(0);
    auto label = corpus::label_from_name(label_);
    if (!label) throw UsageError("--label must be vulnerable or clean");
    req.label = *label;
    if (!function_name_.empty()) req.function_name = function_name_;
    if (!params_.empty()) req.params = params_;
    req.payable = payable_;
    req.leading_filler = !no_leading_filler_;
    req.state_declarations = state_decls_;
    req.extra_members = members_;
    req.pragma = pragma_;
    if (!expected_.empty()) req.expected_condition = expected_;
    const auto inst = corpus::inject(req);
    if (!out_path_.empty()) corpus::save_instance(out_path_, inst);
    if (json_) {
        json j = corpus::sidecar_json(inst);
        j["source"] = inst.source;
        print_json(j);
    } else if (out_path_.empty()) {
        out_ << inst.source;
    } else {
        out_ << "wrote " << inst.instance_id << " under " << out_path_ << "\n";
    }
    return 0;
}

int Cli::cmd_dataset_export()
{
    const std::string tname = template_name_.empty() ? config_->get("gen.template") : template_name_;
    auto tid = rulegen::template_from_name(tname);
    if (!tid) throw UsageError("unknown template '" + tname + "'");
    const auto s = corpus::split(corpus::load_corpus(effective_corpus_dir()), train_n_, split_seed_);
    if (out_path_.empty() || out_path_ == "-") {
        corpus::export_jsonl(s.train, rulegen::prompt_template(*tid), out_);
    } else {
        corpus::export_jsonl(s.train, rulegen::prompt_template(*tid), fs::path(out_path_));
        if (json_) {
            print_json({{"path", out_path_}, {"lines", s.train.size()}, {"template", rulegen::prompt_template(*tid).name}});
        } else {
            out_ << "wrote " << s.train.size() << " lines to " << out_path_ << "\n";
        }
    }
    return 0;
}

int Cli::cmd_dataset_build()
{
    if (out_path_.empty()) throw UsageError("build-bundle needs --out");
    nlohmann::json bundle;
    try {
        bundle = nlohmann::json::parse(read_file(bundle_file_));
    } catch (const nlohmann::json::parse_error& e) {
        throw corpus::MalformedInstance(bundle_file_ + ": " + e.what());
    }
    const auto instances = corpus::build_bundle(bundle, fs::path(bundle_file_).parent_path());
    for (const auto& inst : instances) corpus::save_instance(out_path_, inst);
    if (json_) {
        print_json({{"instances", instances.size()}, {"out", out_path_}});
    } else {
        out_ << "wrote " << instances.size() << " instances under " << out_path_ << "\n";
    }
    return 0;
}

int Cli::cmd_dataset_stats()
{
    const auto all = corpus::load_corpus(effective_corpus_dir());
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& i : all) {
        auto& c = counts[i.swe_id];
        (i.label == corpus::Label::Vulnerable ? c.first : c.second)++;
    }
    if (json_) {
        json j;
        j["total"] = all.size();
        json classes = json::object();
        for (const auto& [swe, c] : counts) classes[swe] = {{"vulnerable", c.first}, {"clean", c.second}};
        j["classes"] = std::move(classes);
        print_json(j);
    } else {
        for (const auto& [swe, c] : counts) {
            out_ << swe << "  vulnerable " << c.first << "  clean " << c.second << "\n";
        }
        out_ << "total " << all.size() << "\n";
    }
    return 0;
}

int Cli::cmd_eval()
{
    auto mode = corpus::match_mode_from_name(mode_);
    if (!mode) throw UsageError("--mode must be syntactic or logical");
    const auto report = corpus::evaluate(corpus::load_pairs(pairs_file_), *mode);
    if (json_) {
        print_json(corpus::em_report_json(report));
    } else {
        out_ << "mode      " << corpus::match_mode_name(report.mode) << "\n"
             << "total     " << report.total << "\n"
             << "matches   " << report.matches << "\n"
             << "EM        " << std::fixed << std::setprecision(1) << report.score << "\n";
    }
    return 0;
}

int Cli::cmd_fetch()
{
    const auto fopts = fetch_options();
    const auto tree = ingest::fetch(target_, fopts);
    const auto set = ingest::resolve_imports(tree, fopts.remappings);
    for (const auto& w : set.warnings) warn(w);
    if (!out_path_.empty()) {
        for (const auto& [path, text] : tree.files) {
            const fs::path dest = fs::path(out_path_) / path;
            if (path.rfind("../", 0) == 0 || fs::path(path).is_absolute()) {
                throw Error("refusing to write outside " + out_path_ + ": " + path);
            }
            fs::create_directories(dest.parent_path());
            write_file_atomic(dest, text);
        }
    }
    if (json_) {
        json j;
        j["entry_file"] = tree.entry_file;
        j["origin"] = {{"kind", ingest::origin_kind_name(tree.origin.kind)},
                       {"location", tree.origin.location},
                       {"detail", tree.origin.detail}};
        j["order"] = set.order;
        j["unresolved"] = set.unresolved;
        j["cycles"] = set.cycles;
        print_json(j);
    } else {
        out_ << ingest::origin_kind_name(tree.origin.kind) << " " << tree.origin.location
             << (tree.origin.detail.empty() ? "" : " (" + tree.origin.detail + ")") << "\n";
        for (const auto& f : set.order) out_ << "  " << f << (f == tree.entry_file ? "  [entry]" : "") << "\n";
        for (const auto& u : set.unresolved) out_ << "  unresolved " << u << "\n";
    }
    return 0;
}

int Cli::cmd_config_show()
{
    if (json_) {
        print_json(config_->show_json());
    } else {
        out_ << config_->show_text();
    }
    return 0;
}

int Cli::cmd_ast()
{
    if (!fs::exists(target_)) throw ingest::NotFound("no such file: " + target_);
    const auto unit = parse_source(read_file(target_), target_);
    if (ast_print_) {
        out_ << pretty_print(unit);
    } else {
        out_ << to_json(unit, 2) << "\n";
    }
    return 0;
}

int Cli::run(const std::vector<std::string>& args)
{
    CLI::App app{"Static analysis for Solidity with generated detectors", "solsentry"};
    app.set_version_flag("--version", SOLSENTRY_VERSION);
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", global_.config_file, "Config file (key = value)");
    app.add_option("--format", global_.format, "Output format: text or json");
    app.add_option("--rules-dir", global_.rules_dir, "Generated rule store directory");
    app.add_option("--cache-dir", global_.cache_dir, "Fetch cache directory");
    app.add_flag("-v,--verbose", global_.verbose, "Log backend traffic (credentials redacted)");

    std::function<int()> action;

    auto* scan = app.add_subcommand("scan", "Scan files, directories, GitHub URLs or addresses");
    scan->add_option("targets", scan_targets_, "Targets")->required();
    scan->add_option("-j,--jobs", scan_jobs_, "Parallel files (0 = processors)");
    scan->add_option("--enable", enable_ids_, "Enable a detector")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    scan->add_option("--disable", disable_ids_, "Disable a detector")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    scan->add_flag("--no-pragma-gate", no_pragma_gate_, "Report SWE-161 regardless of the pragma");
    scan->add_flag("--no-mint-check", no_mint_check_, "Skip the _mint advisory");
    scan->add_flag("--offline", offline_, "Serve remote targets from cache or fixtures only");
    scan->add_option("--network", network_, "Chain for addresses");
    scan->add_option("--http-fixtures", http_fixtures_, "Serve HTTP from a fixture directory");
    scan->add_option("--emit-cfg", emit_cfg_, "Write one DOT file per function into this directory");
    scan->callback([&] { action = [&] { return cmd_scan(); }; });

    auto* gen = app.add_subcommand("gen", "Generate, validate and integrate a detector for one SWE class");
    gen->add_option("swe_id", swe_id_, "SWE id, e.g. SWE-161")->required();
    gen->add_option("corpus", corpus_dir_, "Corpus directory");
    gen->add_option("--template", template_name_, "P_b, P_rb, P_rcb or P_rcbi");
    gen->add_option("--backend", backend_, "fixture, fixture:DIR or live");
    gen->add_option("--fixture-dir", fixture_dir_, "Fixture backend directory");
    gen->add_option("--max-attempts", max_attempts_, "Attempts before giving up");
    gen->add_option("--threshold", threshold_, "Acceptance threshold in (0, 1]");
    gen->add_option("--seed", seed_, "Seed passed to the backend");
    gen->add_option("--model", model_, "Model name for the live backend");
    gen->callback([&] { action = [&] { return cmd_gen(); }; });

    auto* rules_cmd = app.add_subcommand("rules", "Inspect and manage detectors");
    rules_cmd->require_subcommand(1);
    auto* rlist = rules_cmd->add_subcommand("list", "List detectors");
    rlist->callback([&] { action = [&] { return cmd_rules_list(); }; });
    auto* rvalidate = rules_cmd->add_subcommand("validate", "Validate a rule file against the corpus");
    rvalidate->add_option("file", rule_file_)->required();
    rvalidate->add_option("--corpus", corpus_dir_);
    rvalidate->add_option("--threshold", threshold_);
    rvalidate->callback([&] { action = [&] { return cmd_rules_validate(false); }; });
    auto* radd = rules_cmd->add_subcommand("add", "Validate a rule file and add it to the store");
    radd->add_option("file", rule_file_)->required();
    radd->add_option("--corpus", corpus_dir_);
    radd->add_option("--threshold", threshold_);
    radd->callback([&] { action = [&] { return cmd_rules_validate(true); }; });
    auto* rdisable = rules_cmd->add_subcommand("disable", "Disable a detector");
    rdisable->add_option("id", rule_id_arg_)->required();
    rdisable->callback([&] { action = [&] { return cmd_rules_toggle(false); }; });
    auto* renable = rules_cmd->add_subcommand("enable", "Re-enable a detector");
    renable->add_option("id", rule_id_arg_)->required();
    renable->callback([&] { action = [&] { return cmd_rules_toggle(true); }; });

    auto* dataset = app.add_subcommand("dataset", "Corpus tooling");
    dataset->require_subcommand(1);
    auto* ddedup = dataset->add_subcommand("dedup", "Drop duplicate instances");
    ddedup->add_option("corpus", corpus_dir_);
    ddedup->add_option("--out", out_path_, "Write the retained corpus here");
    ddedup->callback([&] { action = [&] { return cmd_dataset_dedup(); }; });
    auto* dsplit = dataset->add_subcommand("split", "Seeded train/test split manifest");
    dsplit->add_option("corpus", corpus_dir_);
    dsplit->add_option("--train", train_n_, "Training instances");
    dsplit->add_option("--seed", split_seed_, "Shuffle seed");
    dsplit->add_option("--out", out_path_, "Manifest file");
    dsplit->callback([&] { action = [&] { return cmd_dataset_split(); }; });
    auto* dinject = dataset->add_subcommand("inject", "Wrap a snippet in a forged contract");
    dinject->add_option("--swe", swe_id_)->required();
    dinject->add_option("--snippet", snippet_);
    dinject->add_option("--snippet-file", snippet_file_);
    dinject->add_option("--seed", seed_);
    dinject->add_option("--id", inject_id_);
    dinject->add_option("--label", label_);
    dinject->add_option("--function", function_name_);
    dinject->add_option("--params", params_);
    dinject->add_flag("--payable", payable_);
    dinject->add_flag("--no-leading-filler", no_leading_filler_, "Start the function body with the snippet");
    dinject->add_option("--state", state_decls_)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    dinject->add_option("--member", members_)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    dinject->add_option("--pragma", pragma_);
    dinject->add_option("--expected", expected_);
    dinject->add_option("--out", out_path_, "Corpus directory to write into");
    dinject->callback([&] { action = [&] { return cmd_dataset_inject(); }; });
    auto* dexport = dataset->add_subcommand("export-jsonl", "Export the training split as chat JSONL");
    dexport->add_option("corpus", corpus_dir_);
    dexport->add_option("--template", template_name_);
    dexport->add_option("--train", train_n_);
    dexport->add_option("--seed", split_seed_);
    dexport->add_option("--out", out_path_, "Output file or - for stdout");
    dexport->callback([&] { action = [&] { return cmd_dataset_export(); }; });
    auto* dbuild = dataset->add_subcommand("build-bundle", "Materialize a corpus from a bundle description");
    dbuild->add_option("bundle", bundle_file_)->required();
    dbuild->add_option("--out", out_path_);
    dbuild->callback([&] { action = [&] { return cmd_dataset_build(); }; });
    auto* dstats = dataset->add_subcommand("stats", "Instance counts per class");
    dstats->add_option("corpus", corpus_dir_);
    dstats->callback([&] { action = [&] { return cmd_dataset_stats(); }; });

    auto* eval = app.add_subcommand("eval", "Exact Match over (generated, expected) pairs");
    eval->add_option("pairs", pairs_file_)->required();
    eval->add_option("--mode", mode_, "syntactic or logical");
    eval->callback([&] { action = [&] { return cmd_eval(); }; });

    auto* fetch = app.add_subcommand("fetch", "Retrieve a source tree");
    fetch->add_option("target", target_)->required();
    fetch->add_flag("--offline", offline_);
    fetch->add_option("--network", network_);
    fetch->add_option("--http-fixtures", http_fixtures_);
    fetch->add_option("--out", out_path_, "Materialize files here");
    fetch->callback([&] { action = [&] { return cmd_fetch(); }; });

    auto* config = app.add_subcommand("config", "Configuration");
    config->require_subcommand(1);
    auto* cshow = config->add_subcommand("show", "Print the effective configuration");
    cshow->callback([&] { action = [&] { return cmd_config_show(); }; });

    auto* ast = app.add_subcommand("ast", "Print a file's AST as JSON");
    ast->add_option("file", target_)->required();
    ast->add_flag("--print", ast_print_, "Pretty-print source instead of JSON");
    ast->callback([&] { action = [&] { return cmd_ast(); }; });

    // The format must be known before parsing can fail.
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--format=json" || (args[i] == "--format" && i + 1 < args.size() && args[i + 1] == "json")) {
            json_ = true;
        }
    }

    std::vector<std::string> argv_store{"solsentry"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out_ << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out_ << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out_ << SOLSENTRY_VERSION << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        return fail(UsageError(e.what()));
    }

    try {
        prepare_config();
        if (!action) throw UsageError("no command given");
        return action();
    } catch (const std::exception& e) {
        return fail(e);
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Cli cli(out, err);
    return cli.run(args);
}

} // namespace solsentry
