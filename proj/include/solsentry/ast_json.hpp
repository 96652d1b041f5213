// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "solsentry/ast.hpp"

namespace solsentry {

/// solc-style JSON: every node carries `id`, `nodeType` and `src`
/// ("offset:length:0"), then its attributes and named children. Absent single
/// slots are written as null.
nlohmann::ordered_json to_json_value(const SourceUnit& unit);
std::string to_json(const SourceUnit& unit, int indent = -1);

/// Accepts to_json output or a solc `ast` object. Unknown nodeTypes become
/// Opaque nodes whose node-valued fields are walked generically. Ids are
/// renumbered in pre-order. When `raw_text` is given every span must lie
/// inside it.
SourceUnit from_json(std::string_view text, std::string file_id = "<json>",
                     std::optional<std::string> raw_text = std::nullopt);
SourceUnit from_json_value(const nlohmann::json& doc, std::string file_id = "<json>",
                           std::optional<std::string> raw_text = std::nullopt);

/// Deterministic Solidity rendering. Throws PrintUnsupported on Opaque nodes.
std::string pretty_print(const SourceUnit& unit);

} // namespace solsentry
