#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace esparse {

// Structured measurement output shared by the dense oracle and the CLI.
// JSON field names are fixed; downstream tooling diffs them, so treat the
// schema string as a versioned contract.
struct VerificationReport {
  double opnorm_error = 0.0;
  double degree_residual_linf = 0.0;
  std::int64_t nnz = 0;
  double loewner_margin = 0.0;
  bool pass = false;
  // Per-item measurements and flags beyond the fixed header fields.
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, bool>> item_pass;
};

std::string to_json(const VerificationReport& r, int indent = 2);

struct RunManifest {
  std::string command;
  std::string config_echo;
  std::uint64_t seed = 0;
  std::string input_digest;
  std::string output_digest;
  double wall_time_sec = 0.0;
  std::string report_path;
};

std::string to_json(const RunManifest& m, int indent = 2);

}  // namespace esparse
