// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "solsentry/ast.hpp"
#include "solsentry/errors.hpp"
#include "solsentry/prompts.hpp"

namespace solsentry::corpus {

enum class Label { Vulnerable, Clean };
enum class Provenance { Github, Etherscan, Injected, Handwritten };

std::string_view label_name(Label l);
std::optional<Label> label_from_name(std::string_view s);
std::string_view provenance_name(Provenance p);
std::optional<Provenance> provenance_from_name(std::string_view s);

struct LabeledInstance {
    std::string instance_id;
    std::string source;
    std::string swe_id;
    Label label = Label::Vulnerable;
    std::optional<Span> marked_span;
    std::optional<std::string> expected_condition;
    Provenance provenance = Provenance::Handwritten;
};

struct DatasetSplit {
    std::vector<LabeledInstance> train;
    std::vector<LabeledInstance> test;
    std::uint64_t split_seed = 0;
    std::size_t total = 0;
    std::size_t train_n = 0;
    std::size_t test_n = 0;
};

class InjectionUnparseable : public Error {
public:
    using Error::Error;
};
class InsufficientInstances : public Error {
public:
    using Error::Error;
};
class MissingExpectedCondition : public Error {
public:
    explicit MissingExpectedCondition(std::string id)
        : Error("instance '" + id + "' has no expected_condition"), instance_id(std::move(id))
    {
    }
    std::string instance_id;
};
class EmptyEvaluation : public Error {
public:
    EmptyEvaluation() : Error("no pairs to evaluate") {}
};
class MalformedInstance : public Error {
public:
    using Error::Error;
};

/// The text a prompt shows for an instance: the marked span when present,
/// otherwise the whole source.
std::string instance_snippet(const LabeledInstance& inst);

/// Sidecar metadata {id, swe_id, label, marked_span, expected_condition, provenance}.
nlohmann::ordered_json sidecar_json(const LabeledInstance& inst);
LabeledInstance instance_from_sidecar(const nlohmann::json& meta, std::string source, const std::string& where);

/// Reads `<dir>/<class>/<id>.sol` + `<id>.json` pairs, ordered by class then id.
std::vector<LabeledInstance> load_corpus(const std::filesystem::path& dir);
/// Writes one instance under `<dir>/<swe-class>/`.
void save_instance(const std::filesystem::path& dir, const LabeledInstance& inst);
/// "SWE-161" -> "swe-161".
std::string class_dir_name(std::string_view swe_id);

/// Comments stripped and whitespace runs collapsed to one space.
std::string dedup_key(std::string_view source);
std::vector<LabeledInstance> dedup(const std::vector<LabeledInstance>& instances);

/// Uniform draw in [0, bound) by rejection, independent of the standard
/// library's distribution implementations.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

struct InjectionRequest {
    std::string instance_id;
    std::string swe_id;
    std::string snippet;
    std::uint64_t seed = 0;
    Label label = Label::Vulnerable;
    std::optional<std::string> function_name;
    /// Parameter list text, e.g. "address spender, uint256 value".
    std::optional<std::string> params;
    bool payable = false;
    /// When false the snippet opens the function body.
    bool leading_filler = true;
    std::vector<std::string> state_declarations;
    /// Extra members placed after the forged function.
    std::vector<std::string> extra_members;
    std::string pragma = "^0.5.0";
    std::optional<std::string> expected_condition;
};

/// Wraps a statement snippet in a synthesized contract and function with
/// seeded names and benign filler statements. Throws InjectionUnparseable.
LabeledInstance inject(const InjectionRequest& request);

/// Builds instances from a bundle description:
///   {"pragma": "^0.5.0", "instances": [entry...]}
/// An entry either injects a `snippet` (with seed, function, params, payable,
/// state, members) or takes a handwritten `source` / `source_file` whose
/// `mark` substring becomes the marked span. Common keys: id, swe_id, label,
/// expected_condition, provenance.
std::vector<LabeledInstance> build_bundle(const nlohmann::json& bundle, const std::filesystem::path& base_dir);

/// Seeded Fisher-Yates shuffle, then prefix/suffix split.
DatasetSplit split(const std::vector<LabeledInstance>& instances, std::size_t train_n, std::uint64_t seed);

/// One chat record per instance: system (if any), user, assistant = expected_condition.
void export_jsonl(const std::vector<LabeledInstance>& train, const rulegen::PromptTemplate& tmpl, std::ostream& out);
void export_jsonl(const std::vector<LabeledInstance>& train, const rulegen::PromptTemplate& tmpl,
                  const std::filesystem::path& path);

enum class MatchMode { Syntactic, Logical };
std::optional<MatchMode> match_mode_from_name(std::string_view s);
std::string_view match_mode_name(MatchMode m);

/// Strips Markdown fences and collapses whitespace.
std::string normalize_condition_text(std::string_view text);
bool exact_match(std::string_view generated, std::string_view expected, MatchMode mode);

/// 100 * matches / total, rounded to one decimal. Throws EmptyEvaluation.
double em_score(const std::vector<std::pair<std::string, std::string>>& pairs, MatchMode mode);
double round1(double value);

struct EmReport {
    MatchMode mode;
    std::size_t total = 0;
    std::size_t matches = 0;
    double score = 0;
};
EmReport evaluate(const std::vector<std::pair<std::string, std::string>>& pairs, MatchMode mode);
nlohmann::ordered_json em_report_json(const EmReport& r);
/// Pairs file: JSON array of {"generated", "expected"} objects or 2-element arrays.
std::vector<std::pair<std::string, std::string>> load_pairs(const std::filesystem::path& path);

} // namespace solsentry::corpus
