#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "esparse/graph.hpp"

namespace esparse {

// Randomized effective-resistance estimation: K = ceil(4 ln(|S|/delta))
// median evaluations (K forced odd), each projecting the weighted incidence
// through an 8-row Gaussian sketch and a fixed-accuracy Laplacian
// pseudoinverse applier. Per-pair work after the sketch is O(1).
//
// The public entry requires a connected undirected support; the _subset
// variant estimates within components (every queried pair must lie inside
// one component, which holds for edge endpoints by construction).
std::vector<double> approx_effective_resistance(
    const Digraph& g, std::span<const double> w,
    std::span<const std::pair<int, int>> pairs, double delta, std::uint64_t seed);

std::vector<double> approx_effective_resistance_subset(
    const Digraph& g, std::span<const double> w, std::span<const int> eids,
    std::span<const std::pair<int, int>> pairs, double delta, std::uint64_t seed);

// 1.5x the median sketch estimate at each edge's endpoints. With probability
// >= 1 - delta these dominate the true resistances, and their weighted sum
// is at most 2n.
std::vector<double> er_overestimate(const Digraph& g, std::span<const double> w,
                                    double delta, std::uint64_t seed);

std::vector<double> er_overestimate_subset(const Digraph& g,
                                           std::span<const double> w,
                                           std::span<const int> eids,
                                           double delta, std::uint64_t seed);

}  // namespace esparse
