#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esparse/decomp.hpp"
#include "esparse/graph.hpp"
#include "esparse/sparsify.hpp"

namespace esparse {

// Partitions the support of w into vertex-disjoint expander pieces plus cut
// edges. Each piece carries a certified conductance lower bound phi obtained
// from the dense spectral gap of its normalized Laplacian. Pieces within one
// weight bucket (ratio r) are handled together so downstream consumers can
// bound resistances by Cheeger. Deterministic; delta is accepted for
// interface parity but unused.
Decomposition expander_decomp(const Digraph& g, double r, double delta,
                              std::uint64_t seed);
Decomposition expander_decomp_subset(const Digraph& g,
                                     std::span<const double> w,
                                     std::span<const int> eids, double r,
                                     double delta, std::uint64_t seed);

// Sparsifies a bipartite-lift graph piece by piece. For each expander piece,
// the high-degree core (combinatorial degree >= beta inside the piece) is
// rebalanced with the two-phase schedule used by decomp_sparsify_inplace,
// then sunk edges are routed through the global tree. Weights are updated in
// place; tree_edges receive the repair deltas.
void expander_spectral_sketch_inplace(const Decomposition& dec,
                                      const Digraph& g, std::vector<double>& w,
                                      std::span<const int> tree_edges,
                                      double delta, double eps,
                                      double weight_cap, double beta,
                                      const SparsifyConfig& cfg,
                                      SparsifyTrace* trace,
                                      std::uint64_t round_key);

struct SketchResult {
  Digraph h;
  SparsifyTrace trace;
};

// Computes a spectral sketch of a directed graph: a reweighted subgraph whose
// directed Laplacian approximates bilinear forms a^T (vL_G - vL_H) z within
// eps * |a|_L * |z|_L per fixed pair with probability 1 - delta. Degrees and
// co-degrees are preserved exactly. Weights must be at least 1.
SketchResult spectral_sketch(const Digraph& g, double eps, double delta,
                             const SparsifyConfig& cfg = {});

// Undirected convenience wrapper: symmetrizes the input, runs the directed
// sketch at a reduced accuracy so quadratic forms of both the Laplacian and
// its pseudoinverse are preserved, and returns the reweighted subgraph.
SketchResult undirected_sketch(const Digraph& g, double eps, double delta,
                               const SparsifyConfig& cfg = {});

}  // namespace esparse
