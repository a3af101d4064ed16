#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "esparse/graph.hpp"

namespace esparse {

struct WEdge {
  int u = 0;
  int v = 0;
  double w = 0.0;
};

class LapSolver;

// Fixed-degree polynomial approximation of L^+. The map b -> apply(b) is
// linear and symmetric (a fixed Chebyshev polynomial of the normalized
// Laplacian, conjugated by D^{-1/2}), which the resistance sketch and the
// Eulerian solve both rely on. Outputs are D-orthogonal to per-component
// constants rather than mean-free; callers that need 1-orthogonality
// center afterwards.
class LinOp {
public:
  int degree() const { return k_; }
  std::vector<double> apply(std::span<const double> b) const;

private:
  friend class LapSolver;
  const LapSolver* s_ = nullptr;
  int k_ = 0;
  double lo_ = 0.0, hi_ = 2.0;
};

// Undirected-Laplacian pseudoinverse applier over an explicit edge list.
// Spectral bookkeeping runs on the Jacobi-normalized operator
// N = D^{-1/2} L D^{-1/2}: lambda_max(N) <= 2 always, and lambda_2(N) is
// estimated by restarted Lanczos (Ritz values approach lambda_2 from above,
// so a safety factor converts the estimate into the lower bound the stopping
// rule needs). Disconnected inputs are handled per component.
struct LapSolverOpts {
  int lanczos_iters = 48;
  int lanczos_restarts = 2;
  double lambda_safety = 0.5;
  int max_iters_base = 200;
  int max_iters_per_n = 8;
  double floor_rel = 1e-14;
  std::uint64_t seed = 0x5eedf00dull;
  // When the iteration cap is hit before the target residual: throw
  // NoConvergence if set, otherwise return the best iterate (the
  // sparsifier's practical profile records and proceeds).
  bool throw_on_stall = true;
};

class LapSolver {
public:
  using Opts = LapSolverOpts;

  LapSolver(int n, std::vector<WEdge> edges, Opts opts = {});

  static LapSolver for_graph(const Digraph& g, std::span<const double> w,
                             Opts opts = {});
  static LapSolver for_subset(const Digraph& g, std::span<const double> w,
                              std::span<const int> eids, Opts opts = {});

  int n() const { return n_; }
  int num_components() const { return num_comps_; }
  const std::vector<int>& comp() const { return comp_; }
  double lambda2_estimate() const { return lambda2_est_; }
  double lambda2_lower() const { return lambda2_lb_; }

  // y = L x.
  void apply(std::span<const double> x, std::span<double> y) const;

  // Energy-norm contract ||x - L^+ b||_L <= xi ||L^+ b||_L, enforced through
  // the conservative residual rule ||r|| <= xi ||b~|| sqrt(lb/2) on the
  // normalized system. b is projected onto the range per component; the
  // result is mean-free per component.
  std::vector<double> solve(std::span<const double> b, double xi,
                            double* achieved_rel = nullptr) const;

  // Degree chosen so the Chebyshev bound 2*q^k meets xi on the certified
  // interval.
  LinOp linear_operator(double xi) const;

private:
  friend class LinOp;

  void apply_normalized(std::span<const double> x, std::span<double> y) const;
  void project_kernel(std::span<double> x) const;
  double lanczos_smallest_ritz(std::uint64_t key) const;

  int n_ = 0;
  Opts opts_;
  std::vector<int> off_, nbr_;
  std::vector<double> wgt_;
  std::vector<double> deg_, dinv_sqrt_;
  std::vector<int> comp_;
  int num_comps_ = 0;
  std::vector<double> kernel_;   // D^{1/2} 1_c, normalized per component
  std::vector<char> comp_has_kernel_;
  double lambda2_est_ = 1.0;
  double lambda2_lb_ = 0.5;
  bool has_edges_ = false;
};

}  // namespace esparse
