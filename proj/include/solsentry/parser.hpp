// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "solsentry/ast.hpp"

namespace solsentry {

/// Parses the supported Solidity subset into a solc-style tree.
///
/// Covers pragmas, imports, contracts/interfaces/libraries, state variables,
/// functions, modifiers, events, the usual statements and the full expression
/// grammar including call options and legacy `.gas()`/`.value()` chains.
/// Inline assembly, structs, enums, `using for`, custom errors and try/catch
/// raise UnsupportedConstruct; malformed input raises SyntaxError.
SourceUnit parse_source(std::string_view text, std::string file_id);

bool is_valid_utf8(std::string_view text);

} // namespace solsentry
