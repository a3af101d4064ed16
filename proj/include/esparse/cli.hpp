#pragma once

#include <string>
#include <vector>

namespace esparse {

// Full command-line driver: parses argv-style arguments, runs the requested
// subcommand, writes outputs/reports/manifest, and returns the process exit
// code (0 success, 2 for any parse, io, or precondition failure; failures
// print a machine-readable error JSON to stdout).
int run_cli(const std::vector<std::string>& args);

}  // namespace esparse
