// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "solsentry/ast_json.hpp"
#include "solsentry/cli.hpp"
#include "solsentry/corpus.hpp"
#include "solsentry/detectors.hpp"
#include "solsentry/parser.hpp"
#include "solsentry/rule_dsl.hpp"
#include "solsentry/rule_store.hpp"

namespace py = pybind11;
using namespace solsentry;

namespace {

std::string scan_json(const std::string& source, const std::string& file_id, bool pragma_gate, bool mint_check,
                      const std::optional<std::string>& rules_dir)
{
    Registry registry = builtin_registry();
    if (rules_dir) rules::RuleStore(*rules_dir).load_into(registry);
    ScanOptions options;
    options.pragma_gate = pragma_gate;
    options.mint_check = mint_check;
    py::gil_scoped_release release;
    return findings_to_json(scan(parse_source(source, file_id), registry, options)).dump();
}

py::tuple cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Native core of the solsentry analyzer";
    m.attr("__version__") = SOLSENTRY_VERSION;

    py::register_exception<Error>(m, "SolsentryError");

    m.def("scan_json", &scan_json, py::arg("source"), py::arg("file_id") = "<input>", py::arg("pragma_gate") = true,
          py::arg("mint_check") = true, py::arg("rules_dir") = std::nullopt);
    m.def(
        "ast_json", [](const std::string& source, const std::string& file_id) { return to_json(parse_source(source, file_id)); },
        py::arg("source"), py::arg("file_id") = "<input>");
    m.def(
        "pretty_print", [](const std::string& source) { return pretty_print(parse_source(source, "<input>")); },
        py::arg("source"));
    m.def(
        "canonical_condition", [](const std::string& text) { return rules::print(rules::canonicalize(rules::parse_condition(text))); },
        py::arg("text"));
    m.def(
        "exact_match",
        [](const std::string& generated, const std::string& expected, const std::string& mode) {
            auto match = corpus::match_mode_from_name(mode);
            if (!match) throw Error("unknown match mode '" + mode + "'");
            return corpus::exact_match(generated, expected, *match);
        },
        py::arg("generated"), py::arg("expected"), py::arg("mode") = "logical");
    m.def(
        "em_score",
        [](const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& mode) {
            auto match = corpus::match_mode_from_name(mode);
            if (!match) throw Error("unknown match mode '" + mode + "'");
            return corpus::em_score(pairs, *match);
        },
        py::arg("pairs"), py::arg("mode") = "logical");
    m.def("run_cli", &cli, py::arg("args"));
}
