#pragma once

#include <utility>
#include <vector>

#include "esparse/graph.hpp"

namespace testutil {

using esparse::Digraph;
using esparse::Edge;

// Complete bidirected graph: both directions between every pair.
inline Digraph complete_bidirected(int n, double w = 1.0) {
  std::vector<Edge> es;
  es.reserve(static_cast<std::size_t>(n) * (n - 1));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v) es.push_back({u, v, w});
  return esparse::build_graph(n, es);
}

inline Digraph directed_cycle(int n, double w = 1.0) {
  std::vector<Edge> es;
  for (int v = 0; v < n; ++v) es.push_back({v, (v + 1) % n, w});
  return esparse::build_graph(n, es);
}

inline Digraph directed_path(int n, double w = 1.0) {
  std::vector<Edge> es;
  for (int v = 0; v + 1 < n; ++v) es.push_back({v, v + 1, w});
  return esparse::build_graph(n, es);
}

// Triangle with unit weights, oriented as a 3-cycle.
inline Digraph triangle() { return directed_cycle(3); }

// Position of edge (h, t) in g's canonical order; -1 if absent.
inline int edge_id(const Digraph& g, int h, int t) {
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    if (g.edges[i].head == h && g.edges[i].tail == t)
      return static_cast<int>(i);
  return -1;
}

}  // namespace testutil
