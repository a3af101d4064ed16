#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "esparse/graph.hpp"
#include "esparse/rng.hpp"
#include "esparse/solver.hpp"
#include "esparse/util.hpp"
#include "helpers.hpp"

using namespace esparse;

TEST_SUITE("graph_core") {

TEST_CASE("build_graph canonicalizes: sorted, merged, validated") {
  std::vector<Edge> es = {{2, 0, 1.5}, {0, 1, 2.0}, {0, 1, 3.0}, {1, 2, 0.25}};
  Digraph g = build_graph(3, es);
  REQUIRE(g.m() == 3);
  // sorted by (head, tail), parallel (0,1) edges merged by weight sum
  CHECK(g.edges[0].head == 0);
  CHECK(g.edges[0].tail == 1);
  CHECK(g.edges[0].w == doctest::Approx(5.0));
  CHECK(g.edges[1].head == 1);
  CHECK(g.edges[1].tail == 2);
  CHECK(g.edges[2].head == 2);
  CHECK(g.edges[2].tail == 0);

  // anti-parallel edges are distinct, never merged
  Digraph h = build_graph(2, {{0, 1, 1.0}, {1, 0, 1.0}});
  CHECK(h.m() == 2);

  CHECK_THROWS_AS(build_graph(3, {{0, 0, 1.0}}), SelfLoop);
  CHECK_THROWS_AS(build_graph(3, {{0, 1, 0.0}}), NonPositiveWeight);
  CHECK_THROWS_AS(build_graph(3, {{0, 1, -2.0}}), NonPositiveWeight);
  CHECK_THROWS_AS(build_graph(3, {{0, 3, 1.0}}), VertexOutOfRange);
  CHECK_THROWS_AS(build_graph(3, {{-1, 2, 1.0}}), VertexOutOfRange);
}

TEST_CASE("degree imbalance and the Eulerian predicate") {
  Digraph cyc = testutil::directed_cycle(5);
  std::vector<double> imb = degree_imbalance(cyc);
  CHECK(norm_inf(imb) == 0.0);
  CHECK(is_eulerian(cyc));

  Digraph path = testutil::directed_path(4);
  imb = degree_imbalance(path);
  CHECK(imb[0] == doctest::Approx(1.0));   // out-degree only
  CHECK(imb[3] == doctest::Approx(-1.0));  // in-degree only
  CHECK(imb[1] == doctest::Approx(0.0));
  CHECK_FALSE(is_eulerian(path));

  // weighted variant: imbalance is B^T w for the supplied weights
  std::vector<double> w = {2.0, 3.0, 5.0};
  imb = degree_imbalance(path, w);
  CHECK(imb[0] == doctest::Approx(2.0));
  CHECK(imb[1] == doctest::Approx(1.0));   // 3 out - 2 in
  CHECK(imb[3] == doctest::Approx(-5.0));
}

TEST_CASE("directed Laplacian apply matches the hand-computed triangle") {
  // 3-cycle 0->1->2->0, unit weights: vL = I - A^T where A^T(v,u)=1 iff u->v.
  // Row v of vL: +1 at v, -1 at the vertex pointing into v.
  Digraph g = testutil::triangle();
  std::vector<double> w = weights_of(g);
  std::vector<double> x = {1.0, 2.0, 4.0}, y(3);
  apply_dir_lap(g, w, x, y);
  // (vL x)_v = d_out(v) x_v - sum_{u->v} w x_u
  CHECK(y[0] == doctest::Approx(1.0 - 4.0));
  CHECK(y[1] == doctest::Approx(2.0 - 1.0));
  CHECK(y[2] == doctest::Approx(4.0 - 2.0));

  std::vector<double> yt(3);
  apply_dir_lap_transpose(g, w, x, yt);
  // transpose: (vL^T x)_u = d_out(u) x_u - sum_{u->v} w x_v
  CHECK(yt[0] == doctest::Approx(1.0 - 2.0));
  CHECK(yt[1] == doctest::Approx(2.0 - 4.0));
  CHECK(yt[2] == doctest::Approx(4.0 - 1.0));

  std::vector<double> yu(3);
  apply_und_lap(g, w, x, yu);
  // undirected triangle Laplacian: 2x_v - (sum of the other two)
  CHECK(yu[0] == doctest::Approx(2.0 - 6.0));
  CHECK(yu[1] == doctest::Approx(4.0 - 5.0));
  CHECK(yu[2] == doctest::Approx(8.0 - 3.0));
}

TEST_CASE("parallel and serial undirected applies agree") {
  Digraph g = random_eulerian(96, 800, 16, 11);
  std::vector<double> w = weights_of(g);
  RngStream rng(stream_key(99, {1}));
  std::vector<double> x(g.n);
  for (double& v : x) v = rng.gauss();
  std::vector<double> ya(g.n), yb(g.n), yc(g.n);
  apply_und_lap(g, w, x, ya);
  apply_und_lap_serial(g, w, x, yb);
  // the solver's CSR gather is the same operator in a different layout
  LapSolver::for_graph(g, w).apply(x, yc);
  for (int i = 0; i < g.n; ++i) {
    CHECK(ya[i] == doctest::Approx(yb[i]).epsilon(1e-13));
    CHECK(yc[i] == doctest::Approx(yb[i]).epsilon(1e-13));
  }
}

TEST_CASE("connected components over a subset view") {
  // two triangles, no connection
  std::vector<Edge> es;
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 3; ++i)
      es.push_back({3 * b + i, 3 * b + (i + 1) % 3, 1.0});
  Digraph g = build_graph(6, es);
  AdjView adj = build_adj(g.n, g.edges);
  std::vector<int> comp = connected_components(adj);
  CHECK(comp[0] == comp[1]);
  CHECK(comp[1] == comp[2]);
  CHECK(comp[3] == comp[4]);
  CHECK(comp[0] != comp[3]);

  // restricting to the first triangle leaves the rest as singletons
  std::vector<int> sub = {0, 1, 2};
  AdjView part = build_adj_subset(g, sub);
  std::vector<int> pc = connected_components(part);
  CHECK(pc[0] == pc[1]);
  CHECK(pc[3] != pc[4]);
}

TEST_CASE("bipartite lift doubles vertices and preserves edge order") {
  Digraph g = random_eulerian(20, 80, 8, 3);
  Digraph lift = bipartite_lift(g);
  REQUIRE(lift.n == 2 * g.n);
  REQUIRE(lift.m() == g.m());
  for (int i = 0; i < g.m(); ++i) {
    CHECK(lift.edges[i].head == g.edges[i].head);
    CHECK(lift.edges[i].tail == g.edges[i].tail + g.n);
    CHECK(lift.edges[i].w == g.edges[i].w);
  }
  CHECK(is_bipartite_lift(lift));
  // a directed triangle admits no all-forward bipartition
  CHECK_FALSE(is_bipartite_lift(testutil::triangle()));
}

TEST_CASE("spanning tree: size, span, and the disconnected throw") {
  Digraph g = random_eulerian(40, 200, 4, 17);
  std::vector<int> tree = spanning_tree(g);
  REQUIRE(static_cast<int>(tree.size()) == g.n - 1);
  // tree edges alone connect everything
  std::vector<Edge> tes;
  for (int id : tree) tes.push_back(g.edges[id]);
  AdjView adj = build_adj(g.n, tes);
  std::vector<int> comp = connected_components(adj);
  CHECK(*std::max_element(comp.begin(), comp.end()) == 0);

  std::vector<Edge> two = {{0, 1, 1.0}, {2, 3, 1.0}};
  Digraph d = build_graph(4, two);
  CHECK_THROWS_AS(spanning_tree(d), Disconnected);

  Forest f = spanning_forest(d);
  CHECK(f.num_comps == 2);
  CHECK(f.edge_ids.size() == 2);
  CHECK(f.comp[0] == f.comp[1]);
  CHECK(f.comp[0] != f.comp[2]);
}

TEST_CASE("random Eulerian generator: connected, balanced, integral") {
  for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
    Digraph g = random_eulerian(50, 400, 32, seed);
    CHECK(g.n == 50);
    CHECK(g.m() >= 400);
    CHECK(is_eulerian(g, 0.0));  // exactly balanced, not just within tolerance
    AdjView adj = build_adj(g.n, g.edges);
    std::vector<int> comp = connected_components(adj);
    CHECK(*std::max_element(comp.begin(), comp.end()) == 0);
    for (const Edge& e : g.edges) {
      CHECK(e.w >= 1.0);
      CHECK(e.w <= 32.0 * g.m());  // merged parallels can exceed the cap
      CHECK(e.w == std::floor(e.w));
    }
  }
  // determinism
  Digraph a = random_eulerian(30, 120, 8, 5);
  Digraph b = random_eulerian(30, 120, 8, 5);
  REQUIRE(a.m() == b.m());
  for (int i = 0; i < a.m(); ++i) {
    CHECK(a.edges[i].head == b.edges[i].head);
    CHECK(a.edges[i].tail == b.edges[i].tail);
    CHECK(a.edges[i].w == b.edges[i].w);
  }
}

TEST_CASE("edge list round trip preserves exact doubles") {
  Digraph g = random_eulerian(12, 40, 6, 23);
  // perturb weights to awkward values
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    g.edges[i].w += 1.0 / 3.0 + 1e-13 * static_cast<double>(i);
  std::stringstream ss;
  write_edge_list(ss, g);
  Digraph h = read_edge_list(ss);
  REQUIRE(h.n == g.n);
  REQUIRE(h.m() == g.m());
  for (int i = 0; i < g.m(); ++i) {
    CHECK(h.edges[i].head == g.edges[i].head);
    CHECK(h.edges[i].tail == g.edges[i].tail);
    CHECK(h.edges[i].w == g.edges[i].w);  // bitwise, via %.17g
  }
}

TEST_CASE("edge list parse errors carry a useful type") {
  std::stringstream bad1("not a header\n");
  CHECK_THROWS_AS(read_edge_list(bad1), ParseError);
  std::stringstream bad2("3 2\n0 1 1.0\n");  // promised 2 edges, gave 1
  CHECK_THROWS_AS(read_edge_list(bad2), ParseError);
  std::stringstream bad3("3 1\n0 five 1.0\n");
  CHECK_THROWS_AS(read_edge_list(bad3), ParseError);
}

}  // TEST_SUITE
