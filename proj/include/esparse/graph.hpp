#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "esparse/errors.hpp"

namespace esparse {

// Directed edge. `head` is the source endpoint, `tail` the destination; the
// signed incidence row of e carries +1 at head and -1 at tail, so the
// imbalance B^T w is weighted out-degree minus weighted in-degree.
struct Edge {
  int head = 0;
  int tail = 0;
  double w = 0.0;
};

// Simple weighted digraph in canonical form: edges sorted by (head, tail),
// parallel duplicates merged by weight summation, no self loops, weights > 0.
struct Digraph {
  int n = 0;
  std::vector<Edge> edges;

  int m() const { return static_cast<int>(edges.size()); }
};

// Undirected adjacency in CSR form over a chosen edge subset. `eid[k]` is the
// position of the arc's edge within the id list the view was built from.
struct AdjView {
  int n = 0;
  std::vector<int> off;
  std::vector<int> nbr;
  std::vector<int> eid;
};

Digraph build_graph(int n, std::vector<Edge> edges);

std::vector<double> weights_of(const Digraph& g);

// B^T w: +w at the head, -w at the tail of every edge.
std::vector<double> degree_imbalance(const Digraph& g, std::span<const double> w);
std::vector<double> degree_imbalance(const Digraph& g);

// max_v |(B^T w)_v| <= tol * ||w||_1.
bool is_eulerian(const Digraph& g, double tol = 1e-9);

// y = (D_out - A^T) x and its transpose; y = L_und x with L_und = B^T W B.
void apply_dir_lap(const Digraph& g, std::span<const double> w,
                   std::span<const double> x, std::span<double> y);
void apply_dir_lap_transpose(const Digraph& g, std::span<const double> w,
                             std::span<const double> x, std::span<double> y);
void apply_und_lap(const Digraph& g, std::span<const double> w,
                   std::span<const double> x, std::span<double> y);

// Serial reference for the OpenMP undirected apply; kept for equivalence
// tests and the kernel benchmark.
void apply_und_lap_serial(const Digraph& g, std::span<const double> w,
                          std::span<const double> x, std::span<double> y);

AdjView build_adj(int n, std::span<const Edge> edges);
AdjView build_adj_subset(const Digraph& g, std::span<const int> eids);

// Component id per vertex over the undirected support of the view.
std::vector<int> connected_components(const AdjView& adj);

// Edge (u,v) becomes (u, v+n); the edge order is preserved index-for-index.
Digraph bipartite_lift(const Digraph& g);

// True when some bipartition (A,B) has every edge directed A -> B.
bool is_bipartite_lift(const Digraph& g);

// BFS tree from vertex 0 over the undirected support; throws Disconnected.
std::vector<int> spanning_tree(const Digraph& g);

// BFS forest over all components: edge ids plus component id per vertex.
struct Forest {
  std::vector<int> edge_ids;
  std::vector<int> comp;
  int num_comps = 0;
};
Forest spanning_forest(const Digraph& g);

// Random Eulerian multigraph-by-cycles: a full-length seed cycle through a
// random vertex permutation, then short random cycles with one integer
// weight in [1, weight_cap] each until the merged edge count reaches
// target_m. Always strongly connected.
Digraph random_eulerian(int n, int target_m, int weight_cap, uint64_t seed);

// Text format: first line "n m", then m lines "head tail weight".
Digraph read_edge_list(std::istream& in);
Digraph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Digraph& g);
void write_edge_list_file(const std::string& path, const Digraph& g);

}  // namespace esparse
