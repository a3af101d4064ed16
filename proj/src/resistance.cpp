#include "esparse/resistance.hpp"

#include <algorithm>
#include <cmath>

#include "esparse/errors.hpp"
#include "esparse/rng.hpp"
#include "esparse/solver.hpp"
#include "esparse/util.hpp"

namespace esparse {

namespace {

constexpr int kSketchRows = 8;
constexpr double kSolveXi = 0.01;

int eval_count(size_t num_pairs, double delta) {
  if (delta <= 0.0 || delta >= 1.0) throw InvalidArgument("delta must be in (0,1)");
  double v = 4.0 * std::log(static_cast<double>(std::max<size_t>(num_pairs, 1)) / delta);
  int k = std::max(1, static_cast<int>(std::ceil(v)));
  if (k % 2 == 0) ++k;
  return k;
}

std::vector<double> median_sketch(const Digraph& g, std::span<const double> w,
                                  std::span<const int> eids,
                                  std::span<const std::pair<int, int>> pairs,
                                  double delta, std::uint64_t seed) {
  const int n = g.n;
  const int k_evals = eval_count(pairs.size(), delta);

  LapSolver::Opts sopts;
  sopts.seed = stream_key(seed, {0x6572736fecull});
  LapSolver solver = LapSolver::for_subset(g, w, eids, sopts);
  LinOp m_op = solver.linear_operator(kSolveXi);

  std::vector<std::vector<double>> ests(pairs.size());
  for (auto& v : ests) v.reserve(k_evals);

  std::vector<double> srow(n);
  std::vector<std::vector<double>> yrows(kSketchRows);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kSketchRows));
  for (int t = 0; t < k_evals; ++t) {
    RngStream rng(stream_key(seed, {0x616572ull, static_cast<uint64_t>(t)}));
    // Rows of Q W^{1/2} B accumulated by scatter, then pushed through the
    // fixed linear operator; entry differences give the quadratic form.
    std::vector<std::vector<double>> srows(kSketchRows, std::vector<double>(n, 0.0));
    for (int id : eids) {
      const Edge& e = g.edges[id];
      double sw = std::sqrt(w[id]);
      for (int j = 0; j < kSketchRows; ++j) {
        double q = rng.gauss() * scale * sw;
        srows[j][e.head] += q;
        srows[j][e.tail] -= q;
      }
    }
    for (int j = 0; j < kSketchRows; ++j) yrows[j] = m_op.apply(srows[j]);
    for (size_t p = 0; p < pairs.size(); ++p) {
      auto [u, v] = pairs[p];
      double acc = 0.0;
      for (int j = 0; j < kSketchRows; ++j) {
        double d = yrows[j][v] - yrows[j][u];
        acc += d * d;
      }
      ests[p].push_back(acc);
    }
  }

  std::vector<double> out(pairs.size());
  for (size_t p = 0; p < pairs.size(); ++p) {
    auto& v = ests[p];
    std::nth_element(v.begin(), v.begin() + k_evals / 2, v.end());
    out[p] = v[k_evals / 2];
  }
  return out;
}

}  // namespace

std::vector<double> approx_effective_resistance_subset(
    const Digraph& g, std::span<const double> w, std::span<const int> eids,
    std::span<const std::pair<int, int>> pairs, double delta, std::uint64_t seed) {
  for (auto [u, v] : pairs)
    if (u < 0 || u >= g.n || v < 0 || v >= g.n)
      throw VertexOutOfRange("resistance query pair");
  return median_sketch(g, w, eids, pairs, delta, seed);
}

std::vector<double> approx_effective_resistance(
    const Digraph& g, std::span<const double> w,
    std::span<const std::pair<int, int>> pairs, double delta, std::uint64_t seed) {
  auto adj = build_adj(g.n, g.edges);
  auto comp = connected_components(adj);
  for (int v = 1; v < g.n; ++v)
    if (comp[v] != comp[0])
      throw Disconnected("effective resistance requires a connected support");
  std::vector<int> all(g.edges.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return approx_effective_resistance_subset(g, w, all, pairs, delta, seed);
}

std::vector<double> er_overestimate_subset(const Digraph& g,
                                           std::span<const double> w,
                                           std::span<const int> eids,
                                           double delta, std::uint64_t seed) {
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(eids.size());
  for (int id : eids) pairs.push_back({g.edges[id].head, g.edges[id].tail});
  auto est = median_sketch(g, w, eids, pairs, delta, seed);
  for (double& x : est) x *= 1.5;
  return est;
}

std::vector<double> er_overestimate(const Digraph& g, std::span<const double> w,
                                    double delta, std::uint64_t seed) {
  auto adj = build_adj(g.n, g.edges);
  auto comp = connected_components(adj);
  for (int v = 1; v < g.n; ++v)
    if (comp[v] != comp[0])
      throw Disconnected("er_overestimate requires a connected support");
  std::vector<int> all(g.edges.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return er_overestimate_subset(g, w, all, delta, seed);
}

}  // namespace esparse
