// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace solsentry {

/// Runs one command line (without the program name). Exit codes: 0 success
/// or clean, 1 domain-negative (findings, rejection, exhaustion), 2
/// operational or usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace solsentry
