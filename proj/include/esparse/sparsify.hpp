#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esparse/decomp.hpp"
#include "esparse/graph.hpp"

namespace esparse {

// paper_faithful evaluates every schedule constant verbatim from the
// guarantees (and therefore only completes on tiny inputs before its
// thresholds allow the loop to run); practical swaps in desk-scale step
// sizes and iteration counts while keeping every structural invariant
// hard-asserted. Asymptotic smallness preconditions throw in paper_faithful
// and are recorded as warnings in practical.
enum class Profile { PaperFaithful, Practical };

struct SparsifyConfig {
  Profile profile = Profile::Practical;
  double c_sign = 1.0;
  double c_bfs = 1.0;
  double c_ps = 1.0;
  double c_ess = 1.0;
  double c_adk = 1.0;
  std::optional<double> eta_override;
  std::optional<int> tau_override;
  std::optional<double> beta_override;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = runtime default; 1 forces the serial reference path

  bool strict() const { return profile == Profile::PaperFaithful; }
  double pmro_xi_floor() const { return strict() ? 0.0 : 1e-12; }
  double xi_outer_floor() const { return strict() ? 0.0 : 1e-11; }

  // Rademacher step size and per-pass iteration budget. The paper couples
  // them through a fixed point (eta depends on tau and vice versa); the
  // practical profile pins the pair the spec endorses.
  double eta(double m_hat, double delta) const;
  int tau(double m_hat, double delta) const;
};

struct SparsifyTrace {
  std::vector<std::string> warnings;
  int rounds = 0;
  std::vector<std::int64_t> round_nnz;
  std::int64_t pmro_calls = 0;
  std::int64_t bfs_calls = 0;
  std::vector<int> bfs_pass_counts;  // outer-loop repetitions per call
  double min_tree_weight = std::numeric_limits<double>::infinity();

  // Deduplicated: schedule warnings repeat across calls and would flood.
  void warn(const std::string& msg) {
    for (const auto& s : warnings)
      if (s == msg) return;
    warnings.push_back(msg);
  }
  void merge(const SparsifyTrace& other);
};

struct BfsOutcome {
  int passes = 0;
  int iterations = 0;
  bool exited_by_sfill = false;
  bool exited_by_potential = false;
  double final_potential = 0.0;
  int s_count = 0;
  int f_size = 0;
};

// One rebalance-and-repair call on a cluster: iteratively multiplies cluster
// weights by (1 + x_t) for near-circulation x_t until a quarter of F has
// sunk below ell * wstar or the log-potential has dropped by the cluster
// size, then restores degrees exactly by tree routing. Weights persist
// across the geometric retry passes. Mutates w on the cluster and
// accumulates the tree correction into tree_delta.
// ambient lists the live edge ids used by the mass-conservation checks;
// ambient_base supplies their reference weights (a snapshot when pieces run
// in parallel, so checks never read concurrent writes). Entries of w inside
// the cluster are read live; everything else reads ambient_base plus the
// caller's own tree_delta.
BfsOutcome basic_fast_sparsify_inplace(
    const Digraph& g, std::vector<double>& w, std::vector<double>& tree_delta,
    std::span<const int> cluster, std::span<const int> ambient,
    std::span<const double> ambient_base, std::span<const double> wstar,
    double ell, double delta, double eps, std::span<const int> fset,
    std::span<const int> tree_edges, const SparsifyConfig& cfg,
    SparsifyTrace* trace, double cluster_wbar, double cluster_rho,
    std::uint64_t call_key);

// Public single-call surface: returns the full updated weight vector.
std::vector<double> basic_fast_sparsify(
    const Digraph& g, std::span<const int> cluster, std::span<const double> w,
    std::span<const double> wstar, double ell, double delta, double eps,
    std::span<const int> fset, std::span<const int> tree_edges,
    const SparsifyConfig& cfg = {}, BfsOutcome* outcome = nullptr,
    SparsifyTrace* trace = nullptr);

// Two-phase schedule over the pieces of a decomposition, then deletion of
// fully sunk edges with exact degree repair. Pieces are edge-disjoint and
// run in parallel against a snapshot; tree corrections merge in piece order
// so results are thread-count independent.
void decomp_sparsify_inplace(const Decomposition& dec, const Digraph& g,
                             std::vector<double>& w, std::span<const int> tree_edges,
                             double delta, double eps, double weight_cap,
                             const SparsifyConfig& cfg, SparsifyTrace* trace,
                             std::uint64_t round_key);

Digraph decomp_sparsify(const Decomposition& dec, const Digraph& g,
                        std::span<const int> tree_edges, double delta, double eps,
                        double weight_cap, const SparsifyConfig& cfg = {},
                        SparsifyTrace* trace = nullptr);

struct SparsifyResult {
  Digraph h;
  SparsifyTrace trace;
};

// Full pipeline: fixed spanning tree, rounds of resistance decomposition +
// per-piece sparsification + thresholded deletion with repair, until the
// off-tree support is below the target size. Degrees are preserved exactly;
// Eulerian inputs stay Eulerian.
SparsifyResult fast_sparsify(const Digraph& g, double eps, double delta,
                             SparsifyConfig cfg = {});

// Round-size target for the loop guard (exposed for tests).
double fast_sparsify_threshold(int n, int m, double eps, double delta, double u_max,
                               int rounds, const SparsifyConfig& cfg);

}  // namespace esparse
