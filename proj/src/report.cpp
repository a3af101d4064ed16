#include "esparse/report.hpp"

#include <json.hpp>

namespace esparse {

std::string to_json(const VerificationReport& r, int indent) {
  nlohmann::json j;
  j["schema"] = "esparse.report.v1";
  j["opnorm_error"] = r.opnorm_error;
  j["degree_residual_linf"] = r.degree_residual_linf;
  j["nnz"] = r.nnz;
  j["loewner_margin"] = r.loewner_margin;
  j["pass"] = r.pass;
  if (!r.values.empty()) {
    nlohmann::json v = nlohmann::json::object();
    for (const auto& [k, x] : r.values) v[k] = x;
    j["values"] = v;
  }
  if (!r.item_pass.empty()) {
    nlohmann::json v = nlohmann::json::object();
    for (const auto& [k, b] : r.item_pass) v[k] = b;
    j["items"] = v;
  }
  return j.dump(indent);
}

std::string to_json(const RunManifest& m, int indent) {
  nlohmann::json j;
  j["schema"] = "esparse.manifest.v1";
  j["command"] = m.command;
  j["config"] = m.config_echo;
  j["seed"] = m.seed;
  j["input_digest"] = m.input_digest;
  j["output_digest"] = m.output_digest;
  j["wall_time_sec"] = m.wall_time_sec;
  j["report_path"] = m.report_path;
  return j.dump(indent);
}

}  // namespace esparse
