#include "esparse/projection.hpp"

#include <algorithm>
#include <cmath>

#include "esparse/errors.hpp"
#include "esparse/util.hpp"

namespace esparse {

std::vector<double> round_to_tree(const Digraph& g, std::span<const double> z,
                                  std::span<const int> tree_edges) {
  if (z.size() != g.edges.size()) throw DimensionMismatch("round_to_tree z");
  const int n = g.n;

  // Imbalance to route: d = B^T z, accumulated exactly.
  std::vector<KahanSum> dacc(n);
  for (size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 0.0) continue;
    dacc[g.edges[i].head].add(z[i]);
    dacc[g.edges[i].tail].add(-z[i]);
  }

  AdjView adj = build_adj_subset(g, tree_edges);
  std::vector<int> parent(n, -1), parent_edge(n, -1), order;
  std::vector<char> seen(n, 0);
  order.reserve(n);
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    seen[s] = 1;
    size_t qh = order.size();
    order.push_back(s);
    while (qh < order.size()) {
      int v = order[qh++];
      for (int k = adj.off[v]; k < adj.off[v + 1]; ++k) {
        int u = adj.nbr[k];
        if (seen[u]) continue;
        seen[u] = 1;
        parent[u] = v;
        parent_edge[u] = tree_edges[adj.eid[k]];
        order.push_back(u);
      }
    }
  }

  double d1 = 0.0;
  for (int v = 0; v < n; ++v) d1 += std::abs(dacc[v].value());

  // Leaf-to-root: each vertex pushes its accumulated imbalance through its
  // parent edge; signs follow the incidence convention (+ at head).
  std::vector<double> y(g.edges.size(), 0.0);
  for (size_t i = order.size(); i-- > 0;) {
    int v = order[i];
    if (parent[v] < 0) continue;
    int e = parent_edge[v];
    double need = dacc[v].value();
    if (g.edges[e].head == v)
      y[e] = need;
    else
      y[e] = -need;
    dacc[parent[v]].add(need);
  }

  // Whatever remains at a root is demand the tree cannot carry anywhere;
  // exact arithmetic leaves zero whenever tree_edges spans every component
  // that z touches, so anything beyond accumulated dust is a caller error.
  for (int v = 0; v < n; ++v)
    if (parent[v] < 0 && std::abs(dacc[v].value()) > 1e-9 * std::max(1.0, d1))
      throw PreconditionViolated("tree does not span the demand support");
  return y;
}

PmroResult project_mass_rebalance_with(const LapSolver& solver_h2, const Digraph& g,
                                       std::span<const double> w,
                                       std::span<const int> cluster_edges,
                                       std::span<const double> v,
                                       std::span<const double> z, double xi,
                                       double xi_floor) {
  const size_t f = cluster_edges.size();
  if (v.size() != f || z.size() != f) throw DimensionMismatch("pmro vectors");
  if (!(xi > 0.0) || xi >= 1.0) throw InvalidArgument("xi must be in (0,1)");
  const int n = g.n;

  double u_cap = 0.0;
  for (int id : cluster_edges) u_cap = std::max(u_cap, w[id]);
  double xi_prime = xi / (9.0 * std::max(1, n) * std::max(u_cap, 1e-300) *
                          std::sqrt(static_cast<double>(std::max<size_t>(f, 1))));
  xi_prime = std::max(xi_prime, xi_floor);

  auto rhs_of = [&](std::span<const double> vec) {
    std::vector<double> rhs(n, 0.0);
    for (size_t k = 0; k < f; ++k) {
      const Edge& e = g.edges[cluster_edges[k]];
      double c = w[cluster_edges[k]] * vec[k];
      rhs[e.head] += c;
      rhs[e.tail] -= c;
    }
    return rhs;
  };
  auto wb_of = [&](std::span<const double> potential) {
    std::vector<double> out(f);
    for (size_t k = 0; k < f; ++k) {
      const Edge& e = g.edges[cluster_edges[k]];
      out[k] = w[cluster_edges[k]] * (potential[e.head] - potential[e.tail]);
    }
    return out;
  };

  std::vector<double> a = solver_h2.solve(rhs_of(v), xi_prime);
  std::vector<double> b = solver_h2.solve(rhs_of(z), xi_prime);

  std::vector<double> q = wb_of(a);  // approximates (I - P_H) v
  std::vector<double> p = wb_of(b);  // approximates (I - P_H) z
  for (size_t k = 0; k < f; ++k) {
    q[k] = v[k] - q[k];
    p[k] = z[k] - p[k];
  }

  PmroResult res;
  res.xi_prime = xi_prime;
  double nq = norm2(q);
  if (nq <= 1e-12 * norm2(v)) {
    res.degenerate = true;
    res.x = std::move(p);
    return res;
  }
  double inv = 1.0 / nq;
  double pu = 0.0;
  for (size_t k = 0; k < f; ++k) pu += p[k] * q[k] * inv;
  for (size_t k = 0; k < f; ++k) p[k] -= pu * q[k] * inv;
  res.x = std::move(p);
  return res;
}

PmroResult project_mass_rebalance(const Digraph& g, std::span<const double> w,
                                  std::span<const int> cluster_edges,
                                  std::span<const double> v, std::span<const double> z,
                                  double xi, const PmroOpts& opts) {
  std::vector<WEdge> es;
  es.reserve(cluster_edges.size());
  for (int id : cluster_edges) {
    const Edge& e = g.edges[id];
    if (!(w[id] > 0.0)) throw NonPositiveWeight("cluster weight must be positive");
    es.push_back({e.head, e.tail, w[id] * w[id]});
  }
  LapSolver solver(g.n, std::move(es), opts.solver);
  return project_mass_rebalance_with(solver, g, w, cluster_edges, v, z, xi,
                                     opts.xi_floor);
}

}  // namespace esparse
