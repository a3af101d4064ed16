#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esparse/graph.hpp"
#include "esparse/solver.hpp"

namespace esparse {

// Exact degree repair by tree routing: returns y supported on the given
// spanning tree (or forest) edges with B^T y = B^T z, computed leaf-to-root
// with compensated accumulation. ||y||_inf <= 0.5 * ||B^T z||_1.
std::vector<double> round_to_tree(const Digraph& g, std::span<const double> z,
                                  std::span<const int> tree_edges);

struct PmroOpts {
  // Floor applied to the inner solve target; the verbatim xi' value
  // underflows double precision at realistic parameters.
  double xi_floor = 0.0;
  LapSolver::Opts solver;
};

struct PmroResult {
  std::vector<double> x;   // aligned with the cluster edge list
  double xi_prime = 0.0;   // solve target actually used
  bool degenerate = false; // rank-one constraint dropped (P_H v vanished)
};

// Approximate application of the constrained circulation projection
// P_{H,v} = P_H - uu^T, u = P_H v / ||P_H v||, via two pseudoinverse solves
// on L_{H^2}: q = v - WBa estimates P_H v, p = z - WBb estimates P_H z, and
// x = p - <p,u>u. Output satisfies, up to xi:
//   supp(x) within the cluster, ||x - P_{H,v}z||_inf <= xi,
//   ||B^T W x||_inf <= xi, |<x,v>| <= xi ||v||_2.
// v and z are cluster-local (aligned with cluster_edges); w is master-indexed.
PmroResult project_mass_rebalance(const Digraph& g, std::span<const double> w,
                                  std::span<const int> cluster_edges,
                                  std::span<const double> v, std::span<const double> z,
                                  double xi, const PmroOpts& opts = {});

// Same computation against a prebuilt solver for L_{H^2} (the sparsifier
// reuses one solver while the active edge set is unchanged).
PmroResult project_mass_rebalance_with(const LapSolver& solver_h2, const Digraph& g,
                                       std::span<const double> w,
                                       std::span<const int> cluster_edges,
                                       std::span<const double> v,
                                       std::span<const double> z, double xi,
                                       double xi_floor = 0.0);

}  // namespace esparse
