#pragma once

#include <optional>
#include <span>
#include <vector>

#include "esparse/graph.hpp"
#include "esparse/sparsify.hpp"

namespace esparse {

struct EulerianSolveResult {
  std::vector<double> x;                  // mean-centered solution
  std::optional<double> achieved_error;   // relative L-norm error when the
                                          // dense oracle is affordable
  int iterations = 0;                     // conjugate gradient steps
  std::int64_t preconditioner_nnz = 0;    // edges kept by the sparsifier
  double condition_estimate = 0.0;        // extreme Ritz value ratio
};

// Solves vL_G x = b for a connected Eulerian graph, where vL is the directed
// Laplacian D_out - A^T. The right-hand side must be orthogonal to the
// all-ones vector. Internally sparsifies the graph once and runs conjugate
// gradient on the normal equations, preconditioned by a fixed polynomial
// approximation of the sparsifier's undirected pseudoinverse.
EulerianSolveResult eulerian_solve(const Digraph& g, std::span<const double> b,
                                   double eps, const SparsifyConfig& cfg = {});

struct StationaryResult {
  std::vector<double> pi;   // nonnegative, sums to one
  int iterations = 0;       // total inner solver steps
  double residual = 0.0;    // final |pi - P^T pi|_2
};

// Stationary distribution of a row-stochastic chain given as a digraph whose
// edge (u, v, p) carries the transition probability u -> v. Requires unit row
// sums and strong connectivity. Alternates power steps with a correction
// solve on the residual, using the undirected Laplacian of the chain
// rescaled by the current estimate as a preconditioner.
StationaryResult stationary_distribution(const Digraph& chain, double eps,
                                         const SparsifyConfig& cfg = {});

}  // namespace esparse
