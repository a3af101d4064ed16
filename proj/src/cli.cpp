#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "esparse/apps.hpp"
#include "esparse/cli.hpp"
#include "esparse/decomp.hpp"
#include "esparse/dense.hpp"
#include "esparse/errors.hpp"
#include "esparse/report.hpp"
#include "esparse/rng.hpp"
#include "esparse/sketch.hpp"
#include "esparse/sparsify.hpp"
#include "esparse/util.hpp"

namespace esparse {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("short write to " + path);
}

std::string hex_digest(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return buf;
}

std::string digest_of_file(const std::string& path) {
  return hex_digest(read_file(path));
}

std::string edge_list_string(const Digraph& g) {
  std::ostringstream ss;
  write_edge_list(ss, g);
  return ss.str();
}

std::vector<double> read_vector_file(const std::string& path) {
  std::string text = read_file(path);
  std::istringstream ss(text);
  std::vector<double> v;
  double x;
  while (ss >> x) v.push_back(x);
  if (!ss.eof()) throw ParseError("trailing garbage in " + path);
  return v;
}

std::string format_vector(std::span<const double> v) {
  std::ostringstream ss;
  char buf[64];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x);
    ss << buf;
  }
  return ss.str();
}

struct Common {
  std::string input, output, report;
  double eps = 0.25, delta = 0.01;
  std::uint64_t seed = 0;
  std::string profile = "practical";
  int threads = 0;
};

SparsifyConfig config_of(const Common& c) {
  SparsifyConfig cfg;
  cfg.profile =
      c.profile == "paper" ? Profile::PaperFaithful : Profile::Practical;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  return cfg;
}

void add_common(CLI::App* sub, Common& c, bool with_input = true) {
  if (with_input) sub->add_option("--input", c.input, "edge list file")->required();
  sub->add_option("--output", c.output, "output file");
  sub->add_option("--eps", c.eps, "accuracy parameter");
  sub->add_option("--delta", c.delta, "failure probability budget");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--profile", c.profile, "parameter profile")
      ->check(CLI::IsMember({"paper", "practical"}));
  sub->add_option("--threads", c.threads, "thread cap (0 = library default)");
  sub->add_option("--report", c.report, "write a JSON report here");
}

struct Manifest {
  std::string command;
  std::string config_echo;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, digest
  std::vector<std::pair<std::string, std::string>> outputs;  // path, digest
  std::string report_path;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void emit() const {
    RunManifest m;
    m.command = command;
    m.config_echo = config_echo;
    m.seed = seed;
    std::string acc;
    for (const auto& [p, d] : inputs) acc += (acc.empty() ? "" : ";") + p + "=" + d;
    m.input_digest = acc;
    acc.clear();
    for (const auto& [p, d] : outputs) acc += (acc.empty() ? "" : ";") + p + "=" + d;
    m.output_digest = acc;
    m.report_path = report_path;
    m.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::cerr << to_json(m) << "\n";
  }
};

void deliver_report(const Common& c, Manifest& man, const json& body) {
  std::string text = body.dump(2) + "\n";
  if (!c.report.empty()) {
    write_file(c.report, text);
    man.outputs.emplace_back(c.report, hex_digest(text));
    man.report_path = c.report;
  } else {
    std::cout << text;
  }
}

json trace_json(const SparsifyTrace& tr) {
  return json{{"rounds", tr.rounds},
              {"round_nnz", tr.round_nnz},
              {"pmro_calls", tr.pmro_calls},
              {"rebalance_calls", tr.bfs_calls},
              {"warnings", tr.warnings}};
}

int cmd_gen(const Common& c, int n, int m, int weight_cap, Manifest& man) {
  Digraph g = random_eulerian(n, m, weight_cap, c.seed);
  std::string out = c.output;
  if (out.empty())
    out = "gen-n" + std::to_string(n) + "-m" + std::to_string(m) + "-s" +
          std::to_string(c.seed) + ".el";
  std::string text = edge_list_string(g);
  write_file(out, text);
  man.outputs.emplace_back(out, hex_digest(text));
  man.emit();
  return 0;
}

int cmd_sparsify(const Common& c, Manifest& man) {
  man.inputs.emplace_back(c.input, digest_of_file(c.input));
  Digraph g = read_edge_list_file(c.input);
  SparsifyResult res = fast_sparsify(g, c.eps, c.delta, config_of(c));
  if (!c.output.empty()) {
    std::string text = edge_list_string(res.h);
    write_file(c.output, text);
    man.outputs.emplace_back(c.output, hex_digest(text));
  }
  json body{{"schema", "esparse.sparsify.v1"},
            {"eps", c.eps},
            {"delta", c.delta},
            {"n", g.n},
            {"nnz_in", g.edges.size()},
            {"nnz_out", res.h.edges.size()},
            {"trace", trace_json(res.trace)}};
  if (g.n <= dense::kDefaultGate) {
    VerificationReport rep = dense::verify_sparsifier(g, res.h, c.eps);
    body["verification"] = json::parse(to_json(rep));
  } else {
    body["verification"] = nullptr;
    body["verification_note"] = "dense oracle skipped: graph too large";
  }
  deliver_report(c, man, body);
  man.emit();
  return 0;
}

int cmd_sketch(const Common& c, const std::string& mode, int vectors,
               Manifest& man) {
  man.inputs.emplace_back(c.input, digest_of_file(c.input));
  Digraph g = read_edge_list_file(c.input);
  SketchResult res = mode == "undirected"
                         ? undirected_sketch(g, c.eps, c.delta, config_of(c))
                         : spectral_sketch(g, c.eps, c.delta, config_of(c));
  if (!c.output.empty()) {
    std::string text = edge_list_string(res.h);
    write_file(c.output, text);
    man.outputs.emplace_back(c.output, hex_digest(text));
  }
  json body{{"schema", "esparse.sketch.v1"},
            {"mode", mode},
            {"eps", c.eps},
            {"delta", c.delta},
            {"n", g.n},
            {"nnz_in", g.edges.size()},
            {"nnz_out", res.h.edges.size()},
            {"trace", trace_json(res.trace)}};
  if (g.n <= dense::kDefaultGate && vectors > 0) {
    std::vector<double> wg = weights_of(g), wh = weights_of(res.h);
    bool und = mode == "undirected";
    Eigen::MatrixXd lg = dense::und_lap(g, wg);
    Eigen::MatrixXd diff;
    if (und)
      diff = dense::und_lap(res.h, wh) - lg;
    RngStream rng(stream_key(c.seed, {0x70616972ull}));
    int ok = 0;
    double worst = 0.0;
    for (int k = 0; k < vectors; ++k) {
      std::vector<double> a(g.n), z(g.n);
      for (double& x : a) x = rng.gauss();
      for (double& x : z) x = rng.gauss();
      dense::PairErr pe;
      if (und) {
        Eigen::Map<const Eigen::VectorXd> av(a.data(), g.n), zv(z.data(), g.n);
        pe.abs_err = std::abs(av.dot(diff * zv));
        pe.bound = c.eps * std::sqrt(std::max(0.0, av.dot(lg * av))) *
                   std::sqrt(std::max(0.0, zv.dot(lg * zv)));
      } else {
        pe = dense::sketch_pair_error(g, wg, res.h, wh, a, z, c.eps);
      }
      if (pe.abs_err <= pe.bound) ++ok;
      if (pe.bound > 0.0) worst = std::max(worst, pe.abs_err / pe.bound);
    }
    body["pairs_tested"] = vectors;
    body["pairs_within_bound"] = ok;
    body["worst_pair_ratio"] = worst;
    if (!und) {
      VerificationReport rep =
          dense::verify_sparsifier(g, res.h, std::sqrt(c.eps));
      body["sqrt_eps_verification"] = json::parse(to_json(rep));
    }
  }
  deliver_report(c, man, body);
  man.emit();
  return 0;
}

int cmd_solve(const Common& c, const std::string& rhs_path, Manifest& man) {
  man.inputs.emplace_back(c.input, digest_of_file(c.input));
  man.inputs.emplace_back(rhs_path, digest_of_file(rhs_path));
  Digraph g = read_edge_list_file(c.input);
  std::vector<double> b = read_vector_file(rhs_path);
  EulerianSolveResult res = eulerian_solve(g, b, c.eps, config_of(c));
  if (!c.output.empty()) {
    std::string text = format_vector(res.x);
    write_file(c.output, text);
    man.outputs.emplace_back(c.output, hex_digest(text));
  }
  json body{{"schema", "esparse.solve.v1"},
            {"eps", c.eps},
            {"iterations", res.iterations},
            {"preconditioner_nnz", res.preconditioner_nnz},
            {"condition_estimate", res.condition_estimate}};
  if (res.achieved_error)
    body["achieved_error"] = *res.achieved_error;
  else
    body["achieved_error"] = nullptr;
  deliver_report(c, man, body);
  man.emit();
  return 0;
}

int cmd_stationary(const Common& c, Manifest& man) {
  man.inputs.emplace_back(c.input, digest_of_file(c.input));
  Digraph chain = read_edge_list_file(c.input);
  StationaryResult res = stationary_distribution(chain, c.eps, config_of(c));
  if (!c.output.empty()) {
    std::string text = format_vector(res.pi);
    write_file(c.output, text);
    man.outputs.emplace_back(c.output, hex_digest(text));
  }
  json body{{"schema", "esparse.stationary.v1"},
            {"eps", c.eps},
            {"iterations", res.iterations},
            {"residual", res.residual}};
  deliver_report(c, man, body);
  man.emit();
  return 0;
}

int cmd_decompose(const Common& c, const std::string& kind, double ratio,
                  Manifest& man) {
  man.inputs.emplace_back(c.input, digest_of_file(c.input));
  Digraph g = read_edge_list_file(c.input);
  Decomposition dec = kind == "expander"
                          ? expander_decomp(g, ratio, c.delta, c.seed)
                          : er_decomp(g, ratio, c.delta, c.seed);
  json pieces = json::array();
  for (const Piece& p : dec.pieces)
    pieces.push_back(json{{"vertices", p.vertices.size()},
                          {"edges", p.edges.size()},
                          {"phi", p.phi},
                          {"wbar", p.wbar}});
  json body{{"schema", "esparse.decompose.v1"},
            {"kind", kind},
            {"ratio", dec.ratio},
            {"rho", dec.rho},
            {"coverage", dec.coverage},
            {"phi_min", dec.phi_min},
            {"num_pieces", dec.pieces.size()},
            {"cut_edges", dec.cut_edges.size()},
            {"pieces", pieces}};
  if (g.n <= 128) {
    std::vector<double> w = weights_of(g);
    VerificationReport rep = verify_decomposition(g, w, dec);
    body["verification"] = json::parse(to_json(rep));
  } else {
    body["verification"] = nullptr;
    body["verification_note"] = "exact resistance check skipped: graph too large";
  }
  deliver_report(c, man, body);
  man.emit();
  return 0;
}

int cmd_verify(const Common& c, const std::string& ref_path,
               const std::string& test_path, Manifest& man) {
  man.inputs.emplace_back(ref_path, digest_of_file(ref_path));
  man.inputs.emplace_back(test_path, digest_of_file(test_path));
  Digraph ref = read_edge_list_file(ref_path);
  Digraph test = read_edge_list_file(test_path);
  VerificationReport rep = dense::verify_sparsifier(ref, test, c.eps);
  deliver_report(c, man, json::parse(to_json(rep)));
  man.emit();
  return 0;
}

int cmd_bench(const Common& c, int lo_pow, int hi_pow, Manifest& man) {
  std::ostringstream csv;
  csv << "n,m,wall_sec\n";
  for (int p = lo_pow; p <= hi_pow; ++p) {
    int n = 1 << p;
    int m = 8 * n;
    Digraph g = random_eulerian(n, m, 32,
                                stream_key(c.seed, {static_cast<std::uint64_t>(p)}));
    auto t0 = std::chrono::steady_clock::now();
    SparsifyResult res = fast_sparsify(g, c.eps, c.delta, config_of(c));
    double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    (void)res;
    csv << n << "," << static_cast<int>(g.edges.size()) << "," << sec << "\n";
  }
  if (!c.output.empty()) {
    write_file(c.output, csv.str());
    man.outputs.emplace_back(c.output, hex_digest(csv.str()));
  } else {
    std::cout << csv.str();
  }
  man.emit();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"effective-resistance sparsifiers and spectral sketches"};
  app.require_subcommand(1);

  Common c;
  int gen_n = 64, gen_m = 512, gen_cap = 32;
  std::string mode = "eulerian", kind = "er";
  std::string rhs_path, ref_path, test_path, chain_path;
  int vectors = 0;
  double ratio = 2.0;
  int lo_pow = 8, hi_pow = 13;

  CLI::App* gen = app.add_subcommand("gen", "generate a random Eulerian graph");
  gen->add_option("--n", gen_n, "vertices")->required();
  gen->add_option("--m", gen_m, "target edge count")->required();
  gen->add_option("--weight-cap", gen_cap, "max integer weight");
  add_common(gen, c, /*with_input=*/false);

  CLI::App* sp = app.add_subcommand("sparsify", "compute an Eulerian sparsifier");
  add_common(sp, c);

  CLI::App* sk = app.add_subcommand("sketch", "compute a spectral sketch");
  sk->add_option("--mode", mode, "eulerian or undirected")
      ->check(CLI::IsMember({"eulerian", "undirected"}));
  sk->add_option("--vectors", vectors, "random pairs to test in the report");
  add_common(sk, c);

  CLI::App* so = app.add_subcommand("solve", "solve vL x = b on an Eulerian graph");
  so->add_option("--rhs", rhs_path, "right-hand side file")->required();
  add_common(so, c);

  CLI::App* st = app.add_subcommand("stationary", "stationary distribution of a chain");
  st->add_option("--chain", chain_path, "row-stochastic edge list")->required();
  add_common(st, c, /*with_input=*/false);

  CLI::App* de = app.add_subcommand("decompose", "resistance or expander decomposition");
  de->add_option("--kind", kind, "er or expander")
      ->check(CLI::IsMember({"er", "expander"}));
  de->add_option("--ratio", ratio, "weight bucket ratio");
  add_common(de, c);

  CLI::App* ve = app.add_subcommand("verify", "dense-oracle sparsifier verification");
  ve->add_option("--ref", ref_path, "reference edge list")->required();
  ve->add_option("--test", test_path, "candidate edge list")->required();
  add_common(ve, c, /*with_input=*/false);

  CLI::App* be = app.add_subcommand("bench", "sparsifier wall-time sweep, CSV output");
  be->add_option("--lo-pow", lo_pow, "smallest size as a power of two");
  be->add_option("--hi-pow", hi_pow, "largest size as a power of two");
  add_common(be, c, /*with_input=*/false);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    json err{{"schema", "esparse.error.v1"},
             {"error", "ParseError"},
             {"message", e.what()}};
    std::cout << err.dump(2) << "\n";
    return 2;
  }

  Manifest man;
  for (const std::string& a : args)
    man.config_echo += (man.config_echo.empty() ? "" : " ") + a;
  man.seed = c.seed;
  if (!args.empty()) man.command = args.front();

  try {
    if (gen->parsed()) return cmd_gen(c, gen_n, gen_m, gen_cap, man);
    if (sp->parsed()) return cmd_sparsify(c, man);
    if (sk->parsed()) return cmd_sketch(c, mode, vectors, man);
    if (so->parsed()) return cmd_solve(c, rhs_path, man);
    if (st->parsed()) {
      c.input = chain_path;
      return cmd_stationary(c, man);
    }
    if (de->parsed()) return cmd_decompose(c, kind, ratio, man);
    if (ve->parsed()) return cmd_verify(c, ref_path, test_path, man);
    if (be->parsed()) return cmd_bench(c, lo_pow, hi_pow, man);
    throw InvalidArgument("no subcommand selected");
  } catch (const Error& e) {
    json err{{"schema", "esparse.error.v1"},
             {"error", e.code()},
             {"message", e.what()}};
    std::cout << err.dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err{{"schema", "esparse.error.v1"},
             {"error", "Internal"},
             {"message", e.what()}};
    std::cout << err.dump(2) << "\n";
    return 2;
  }
}

}  // namespace esparse
