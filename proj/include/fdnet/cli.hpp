// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_CLI_HPP
#define FDNET_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace fdnet {

/// Entry point behind the `fdnet` binary. `args` excludes the program name.
/// Subcommands: flops, bench, run, gen-weights, export-arch. Returns the
/// process exit code; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdnet

#endif  // FDNET_CLI_HPP
