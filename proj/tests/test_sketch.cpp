#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "esparse/dense.hpp"
#include "esparse/errors.hpp"
#include "esparse/graph.hpp"
#include "esparse/sketch.hpp"
#include "esparse/util.hpp"
#include "helpers.hpp"

using namespace esparse;

namespace {

Digraph two_cliques_bridged(int k, double wc = 1.0) {
  std::vector<Edge> es;
  for (int b = 0; b < 2; ++b)
    for (int u = 0; u < k; ++u)
      for (int v = 0; v < k; ++v)
        if (u != v) es.push_back({b * k + u, b * k + v, wc});
  es.push_back({0, k, wc});
  es.push_back({k, 0, wc});
  return build_graph(2 * k, es);
}

}  // namespace

TEST_SUITE("sketch") {

TEST_CASE("a complete graph certifies as a single expander piece") {
  Digraph g = testutil::complete_bidirected(32);
  Decomposition dec = expander_decomp(g, 2.0, 0.01, 7);
  CHECK(dec.kind == DecompKind::Expander);
  REQUIRE(dec.pieces.size() == 1);
  CHECK(dec.cut_edges.empty());
  CHECK(dec.coverage == doctest::Approx(1.0));
  // normalized lambda_2 of the complete support is n/(n-1); phi = sqrt(2 l2)
  double lam2 = 32.0 / 31.0;
  CHECK(dec.pieces[0].phi == doctest::Approx(std::sqrt(2.0 * lam2)).epsilon(1e-9));
  CHECK(dec.phi_min == doctest::Approx(dec.pieces[0].phi));
  CHECK(dec.pieces[0].edges.size() == static_cast<std::size_t>(g.m()));
  // unit weights land in the (1/2, 1] bucket
  CHECK(dec.pieces[0].wbar == doctest::Approx(0.5));

  std::vector<double> w = weights_of(g);
  VerificationReport rep = verify_decomposition(g, w, dec);
  CHECK(rep.pass);
}

TEST_CASE("a dumbbell splits at the bridge and both sides certify") {
  // sides must be large enough that the bridge gap undershoots the
  // polylog certification target; 48 per side gives lambda_2 well below it
  constexpr int k = 48;
  Digraph g = two_cliques_bridged(k);
  Decomposition dec = expander_decomp(g, 2.0, 0.01, 1);
  REQUIRE(dec.pieces.size() == 2);
  CHECK(dec.cut_edges.size() == 2);  // both bridge arcs
  for (int id : dec.cut_edges) {
    bool crosses = (g.edges[id].head < k) != (g.edges[id].tail < k);
    CHECK(crosses);
  }
  for (const Piece& p : dec.pieces) {
    CHECK(p.vertices.size() == static_cast<std::size_t>(k));
    CHECK(p.edges.size() == static_cast<std::size_t>(k * (k - 1)));
    CHECK(p.phi > 1.0);  // a clique is far above the certification target
  }
  std::vector<double> w = weights_of(g);
  CHECK(verify_decomposition(g, w, dec).pass);
}

TEST_CASE("weight buckets split before any spectral work") {
  // two weight scales on one clique: the heavy pairs and light pairs land in
  // separate buckets even though they share vertices
  std::vector<Edge> es;
  int k = 8;
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v)
      if (u != v) es.push_back({u, v, (u + v) % 2 == 0 ? 1.0 : 3.0});
  Digraph g = build_graph(k, es);
  Decomposition dec = expander_decomp(g, 2.0, 0.01, 3);
  CHECK(dec.coverage == doctest::Approx(3.0));  // buckets 1 and 3 are two scales apart
  for (const Piece& p : dec.pieces)
    for (int id : p.edges) {
      CHECK(g.edges[id].w > p.wbar * (1.0 - 1e-12));
      CHECK(g.edges[id].w <= 2.0 * p.wbar * (1.0 + 1e-12));
    }
}

TEST_CASE("oversized components refuse dense certification") {
  Digraph g = testutil::directed_cycle(5000);
  CHECK_THROWS_AS(expander_decomp(g, 2.0, 0.01, 0), QualityNotMet);
}

TEST_CASE("conductance certificates bound resistances inside pieces") {
  // the chain the sketch relies on: lambda_2 >= phi^2/2, weighted degrees at
  // least (min piece degree) * wbar, so max_w * max_er <= 8/(beta phi^2)
  for (int n : {10, 14}) {
    Digraph g = testutil::complete_bidirected(n);
    std::vector<double> w = weights_of(g);
    Decomposition dec = expander_decomp(g, 2.0, 0.01, 2);
    REQUIRE(dec.pieces.size() == 1);
    const Piece& p = dec.pieces[0];

    std::vector<int> degree(g.n, 0);
    for (int id : p.edges) {
      ++degree[g.edges[id].head];
      ++degree[g.edges[id].tail];
    }
    int beta_eff = g.m();
    for (int v : p.vertices) beta_eff = std::min(beta_eff, degree[v]);

    Eigen::MatrixXd er = dense::exact_er_matrix(g, w);
    double max_er = 0.0, max_w = 0.0;
    for (int id : p.edges) {
      max_er = std::max(max_er, er(g.edges[id].head, g.edges[id].tail));
      max_w = std::max(max_w, w[id]);
    }
    CHECK(max_w * max_er <=
          8.0 / (beta_eff * p.phi * p.phi) * (1.0 + 1e-9));
  }
}

TEST_CASE("core rebalancing preserves lift degrees exactly") {
  // dense lift: complete digraph on 90 vertices has lift density 8010/180,
  // comfortably past the 40x floor, so the whole piece is its own core
  Digraph base = testutil::complete_bidirected(90);
  Digraph lift = bipartite_lift(base);
  REQUIRE(is_bipartite_lift(lift));
  std::vector<double> w = weights_of(lift);
  Forest forest = spanning_forest(lift);
  std::vector<char> in_tree(lift.m(), 0);
  for (int id : forest.edge_ids) in_tree[id] = 1;
  std::vector<int> live;
  for (int i = 0; i < lift.m(); ++i)
    if (!in_tree[i]) live.push_back(i);

  Decomposition dec = expander_decomp_subset(lift, w, live, 2.0, 0.005, 5);
  REQUIRE(dec.pieces.size() == 1);
  CHECK(dec.pieces[0].phi > 1.0);

  std::vector<double> before = degree_imbalance(lift, w);
  SparsifyConfig cfg;
  cfg.seed = 17;
  SparsifyTrace trace;
  std::vector<double> w2 = w;
  expander_spectral_sketch_inplace(dec, lift, w2, forest.edge_ids, 0.005, 0.005,
                                   1.0, 8.0, cfg, &trace, 99);

  CHECK(trace.bfs_calls > 0);
  CHECK(trace.pmro_calls > 0);
  std::vector<double> after = degree_imbalance(lift, w2);
  double scale = norm1(w);
  for (int v = 0; v < lift.n; ++v)
    CHECK(std::abs(after[v] - before[v]) <= 1e-9 * scale);
  for (double x : w2) CHECK(x >= 0.0);
  bool changed = false;
  for (int i = 0; i < lift.m(); ++i) changed |= (w2[i] != w[i]);
  CHECK(changed);
}

TEST_CASE("rebalancing gates its inputs") {
  Digraph tri = testutil::triangle();  // not a lift
  std::vector<double> w = weights_of(tri);
  Decomposition dec;
  dec.kind = DecompKind::Expander;
  SparsifyConfig cfg;
  SparsifyTrace trace;
  CHECK_THROWS_AS(
      expander_spectral_sketch_inplace(dec, tri, w, {}, 0.005, 0.005, 1.0, 8.0,
                                       cfg, &trace, 0),
      NotBipartiteLift);

  Digraph lift = bipartite_lift(tri);
  std::vector<double> wl = weights_of(lift);
  CHECK_THROWS_AS(
      expander_spectral_sketch_inplace(dec, lift, wl, {}, 0.02, 0.005, 1.0, 8.0,
                                       cfg, &trace, 0),
      PreconditionViolated);  // delta past 1/100
  CHECK_THROWS_AS(
      expander_spectral_sketch_inplace(dec, lift, wl, {}, 0.005, 0.005, 1.0,
                                       -1.0, cfg, &trace, 0),
      InvalidArgument);  // beta
  CHECK_THROWS_AS(
      expander_spectral_sketch_inplace(dec, lift, wl, {}, 0.005, 0.005, 0.5,
                                       8.0, cfg, &trace, 0),
      PreconditionViolated);  // weights exceed the stated cap
}

TEST_CASE("sparse graphs sketch to themselves") {
  Digraph g = random_eulerian(64, 512, 32, 12);
  SketchResult res = spectral_sketch(g, 0.5, 0.1);
  CHECK(res.trace.rounds == 0);
  REQUIRE(res.h.m() == g.m());
  for (int i = 0; i < g.m(); ++i) {
    CHECK(res.h.edges[i].head == g.edges[i].head);
    CHECK(res.h.edges[i].tail == g.edges[i].tail);
    CHECK(res.h.edges[i].w == g.edges[i].w);
  }
}

TEST_CASE("dense graphs engage the loop and keep both degree vectors") {
  Digraph g = testutil::complete_bidirected(90);
  SparsifyConfig cfg;
  cfg.seed = 4;
  cfg.beta_override = 8.0;
  cfg.c_ess = 1e-3;  // pulls the size threshold below m so the loop runs
  SketchResult res = spectral_sketch(g, 0.005, 0.005, cfg);
  CHECK(res.trace.rounds >= 1);
  CHECK(res.trace.pmro_calls > 0);

  // out-degrees and in-degrees both survive exactly (the lift's balance)
  std::vector<double> out_g(g.n, 0.0), in_g(g.n, 0.0);
  for (const Edge& e : g.edges) {
    out_g[e.head] += e.w;
    in_g[e.tail] += e.w;
  }
  std::vector<double> out_h(g.n, 0.0), in_h(g.n, 0.0);
  for (const Edge& e : res.h.edges) {
    REQUIRE(e.w > 0.0);
    out_h[e.head] += e.w;
    in_h[e.tail] += e.w;
  }
  double scale = 0.0;
  for (const Edge& e : g.edges) scale += e.w;
  for (int v = 0; v < g.n; ++v) {
    CHECK(std::abs(out_g[v] - out_h[v]) <= 1e-9 * scale);
    CHECK(std::abs(in_g[v] - in_h[v]) <= 1e-9 * scale);
  }
}

TEST_CASE("undirected wrapper symmetrizes and stays exact when idle") {
  // C4 with mixed orientations and an anti-parallel pair that must merge
  std::vector<Edge> es = {{1, 0, 2.0}, {0, 1, 3.0}, {1, 2, 1.0}, {3, 2, 1.5},
                          {0, 3, 1.0}};
  Digraph g = build_graph(4, es);
  SketchResult res = undirected_sketch(g, 0.5, 0.1);
  CHECK(res.trace.rounds == 0);
  // canonical orientation: all edges head < tail, anti-parallels merged
  REQUIRE(res.h.m() == 4);
  CHECK(res.h.edges[0].head == 0);
  CHECK(res.h.edges[0].tail == 1);
  CHECK(res.h.edges[0].w == doctest::Approx(5.0));

  // undirected quadratic forms are orientation-invariant, so they match the
  // original exactly
  std::vector<double> wg = weights_of(g), wh = weights_of(res.h);
  Eigen::MatrixXd lg = dense::und_lap(g, wg);
  Eigen::MatrixXd lh = dense::und_lap(res.h, wh);
  CHECK((lg - lh).norm() < 1e-12);
}

TEST_CASE("sketch input gates") {
  Digraph path = testutil::directed_path(5);
  CHECK_THROWS_AS(spectral_sketch(path, 0.5, 0.1), NotEulerian);

  Digraph cyc = testutil::directed_cycle(5, 0.25);  // weights below one
  CHECK_THROWS_AS(spectral_sketch(cyc, 0.5, 0.1), InvalidArgument);

  Digraph ok = testutil::directed_cycle(5);
  CHECK_THROWS_AS(spectral_sketch(ok, 0.0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(spectral_sketch(ok, 0.5, 1.0), InvalidArgument);

  SparsifyConfig strictc;
  strictc.profile = Profile::PaperFaithful;
  // the strict profile narrows the accepted range to (0, 1/100)
  CHECK_THROWS_AS(spectral_sketch(ok, 0.5, 0.1, strictc), InvalidArgument);
  SketchResult res = spectral_sketch(ok, 0.005, 0.005, strictc);
  CHECK(res.h.m() == ok.m());
}

TEST_CASE("decomposition parameter validation") {
  Digraph g = testutil::triangle();
  CHECK_THROWS_AS(expander_decomp(g, 0.5, 0.01, 0), InvalidArgument);
  std::vector<double> w = {1.0, -1.0, 1.0};
  std::vector<int> ids = {0, 1, 2};
  CHECK_THROWS_AS(expander_decomp_subset(g, w, ids, 2.0, 0.01, 0),
                  NonPositiveWeight);
  std::vector<int> bad = {0, 9};
  CHECK_THROWS_AS(expander_decomp_subset(g, weights_of(g), bad, 2.0, 0.01, 0),
                  InvalidArgument);
}

}  // TEST_SUITE
