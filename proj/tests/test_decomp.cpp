#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "doctest.h"
#include "esparse/decomp.hpp"
#include "esparse/graph.hpp"
#include "esparse/rng.hpp"
#include "esparse/util.hpp"
#include "helpers.hpp"

using namespace esparse;

namespace {

// Shortest-path distances inside one region, lengths indexed by eid position.
std::vector<double> region_dijkstra(const Digraph& g, std::span<const int> eids,
                                    std::span<const double> len,
                                    const std::vector<int>& label, int region,
                                    int src) {
  std::vector<double> dist(g.n, std::numeric_limits<double>::infinity());
  std::priority_queue<std::pair<double, int>, std::vector<std::pair<double, int>>,
                      std::greater<>> pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  // adjacency restricted to in-region edges
  std::vector<std::vector<std::pair<int, double>>> adj(g.n);
  for (std::size_t k = 0; k < eids.size(); ++k) {
    const Edge& e = g.edges[eids[k]];
    if (label[e.head] == region && label[e.tail] == region) {
      adj[e.head].push_back({e.tail, len[k]});
      adj[e.tail].push_back({e.head, len[k]});
    }
  }
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (auto [u, l] : adj[v])
      if (d + l < dist[u]) {
        dist[u] = d + l;
        pq.push({dist[u], u});
      }
  }
  return dist;
}

}  // namespace

TEST_SUITE("decomposition") {

TEST_CASE("region growing certificates hold on random instances") {
  for (std::uint64_t seed : {3ull, 14ull, 15ull, 92ull}) {
    Digraph g = random_eulerian(48, 260, 8, seed);
    std::vector<int> eids(g.m());
    for (int i = 0; i < g.m(); ++i) eids[i] = i;
    RngStream rng(stream_key(seed, {0xd1ull}));
    std::vector<double> len(g.m()), wm(g.m());
    for (int i = 0; i < g.m(); ++i) {
      len[i] = 0.05 + rng.unif();
      wm[i] = g.edges[i].w;
    }
    double d = 0.35;
    RegionGrowResult rg = region_grow(g, eids, len, wm, d);

    REQUIRE(rg.num_regions >= 1);
    double rad_cap = d * std::log(g.n + 1.0);

    // every region: radius certificate, then the doubled diameter bound
    // measured from scratch with in-region Dijkstra from every vertex
    for (int reg = 0; reg < rg.num_regions; ++reg) {
      CHECK(rg.radius[reg] <= rad_cap * (1.0 + 1e-12));
      std::vector<int> members;
      for (int v = 0; v < g.n; ++v)
        if (rg.label[v] == reg) members.push_back(v);
      double diam = 0.0;
      for (int v : members) {
        std::vector<double> dist = region_dijkstra(g, eids, len, rg.label, reg, v);
        for (int u : members) {
          REQUIRE(std::isfinite(dist[u]));  // regions are connected
          diam = std::max(diam, dist[u]);
        }
      }
      CHECK(diam <= 2.0 * rad_cap * (1.0 + 1e-12));
    }

    // cut certificate, re-accumulated from the labels
    KahanSum cutw, vol;
    for (int i = 0; i < g.m(); ++i) {
      vol.add(wm[i] * len[i]);
      if (rg.label[g.edges[i].head] != rg.label[g.edges[i].tail])
        cutw.add(wm[i]);
    }
    CHECK(cutw.value() == doctest::Approx(rg.cut_weight).epsilon(1e-12));
    CHECK(rg.cut_weight <= 2.0 * vol.value() / d * (1.0 + 1e-12));
    CHECK(rg.vol_total == doctest::Approx(vol.value()).epsilon(1e-12));
  }
}

TEST_CASE("region growing is deterministic and seeds at the lowest id") {
  Digraph g = random_eulerian(30, 150, 4, 6);
  std::vector<double> len(g.m(), 0.2), wm = weights_of(g);
  RegionGrowResult a = region_grow(g, len, wm, 0.5);
  RegionGrowResult b = region_grow(g, len, wm, 0.5);
  CHECK(a.label == b.label);
  CHECK(a.cut_weight == b.cut_weight);
  CHECK(a.label[0] == 0);  // vertex 0 is uncovered first, so it seeds region 0
}

TEST_CASE("tiny d shatters, huge d swallows") {
  Digraph g = testutil::complete_bidirected(12);
  std::vector<double> len(g.m(), 1.0), wm = weights_of(g);
  // radius cap below any edge length: every vertex its own region
  RegionGrowResult shatter = region_grow(g, len, wm, 1e-6);
  CHECK(shatter.num_regions == 12);
  CHECK(shatter.cut_weight == doctest::Approx(wm.size()));
  // radius cap above the diameter: one region, empty cut
  RegionGrowResult one = region_grow(g, len, wm, 100.0);
  CHECK(one.num_regions == 1);
  CHECK(one.cut_weight == 0.0);
  CHECK(one.cut_local.empty());
}

TEST_CASE("resistance decomposition passes its own verifier") {
  for (std::uint64_t seed : {1ull, 8ull, 23ull}) {
    Digraph g = random_eulerian(40, 300, 16, seed);
    Decomposition dec = er_decomp(g, 2.0, 0.1, seed * 7 + 5);
    CHECK(dec.kind == DecompKind::EffectiveResistance);
    CHECK(dec.ratio == 2.0);
    std::vector<double> w = weights_of(g);
    VerificationReport rep = verify_decomposition(g, w, dec);
    for (auto& [name, ok] : rep.item_pass) {
      INFO("item ", name, " seed ", seed);
      CHECK(ok);
    }
    CHECK(rep.pass);
  }
}

TEST_CASE("decomposition partitions the edges exactly once") {
  Digraph g = random_eulerian(36, 220, 8, 77);
  Decomposition dec = er_decomp(g, 2.0, 0.1, 3);
  std::vector<int> seen(g.m(), 0);
  for (const Piece& p : dec.pieces) {
    CHECK(!p.edges.empty());
    for (int id : p.edges) ++seen[id];
    // vertices are exactly the endpoints of the piece edges
    std::vector<int> endpoints;
    for (int id : p.edges) {
      endpoints.push_back(g.edges[id].head);
      endpoints.push_back(g.edges[id].tail);
    }
    std::sort(endpoints.begin(), endpoints.end());
    endpoints.erase(std::unique(endpoints.begin(), endpoints.end()),
                    endpoints.end());
    CHECK(p.vertices == endpoints);
    // bucket discipline: piece weights lie in (wbar, 2*wbar]
    for (int id : p.edges) {
      CHECK(g.edges[id].w > p.wbar * (1.0 - 1e-12));
      CHECK(g.edges[id].w <= 2.0 * p.wbar * (1.0 + 1e-12));
    }
  }
  for (int id : dec.cut_edges) ++seen[id];
  for (int i = 0; i < g.m(); ++i) CHECK(seen[i] == 1);
  // certified cut volume: at most half the edges
  CHECK(dec.cut_edges.size() * 2 <= static_cast<std::size_t>(g.m()));
  // coverage counts weight scales: integer weights up to 16*m keep it small
  CHECK(dec.coverage <= std::log2(16.0 * g.m()) + 3.0);
}

TEST_CASE("subset decomposition ignores outside edges and tolerates splits") {
  // two cliques bridged by a single light cycle; restrict to one clique
  std::vector<Edge> es;
  int k = 10;
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v)
      if (u != v) es.push_back({u, v, 4.0});
  for (int u = k; u < 2 * k; ++u)
    for (int v = k; v < 2 * k; ++v)
      if (u != v) es.push_back({u, v, 4.0});
  es.push_back({0, k, 1.0});
  es.push_back({k, 0, 1.0});
  Digraph g = build_graph(2 * k, es);
  std::vector<double> w = weights_of(g);

  std::vector<int> first;
  for (int i = 0; i < g.m(); ++i)
    if (g.edges[i].head < k && g.edges[i].tail < k) first.push_back(i);

  Decomposition dec = er_decomp_subset(g, w, first, 2.0, 0.1, 11);
  std::size_t covered = dec.cut_edges.size();
  for (const Piece& p : dec.pieces) {
    covered += p.edges.size();
    for (int id : p.edges) {
      CHECK(g.edges[id].head < k);
      CHECK(g.edges[id].tail < k);
    }
  }
  CHECK(covered == first.size());

  // disconnected support: both cliques, no bridge
  std::vector<int> both;
  for (int i = 0; i < g.m(); ++i)
    if (g.edges[i].w > 2.0) both.push_back(i);
  Decomposition dd = er_decomp_subset(g, w, both, 2.0, 0.1, 12);
  std::size_t cov2 = dd.cut_edges.size();
  for (const Piece& p : dd.pieces) cov2 += p.edges.size();
  CHECK(cov2 == both.size());
}

TEST_CASE("parameter validation") {
  Digraph g = testutil::triangle();
  CHECK_THROWS_AS(er_decomp(g, 1.0, 0.1, 0), InvalidArgument);   // ratio <= 1
  CHECK_THROWS_AS(er_decomp(g, 2.0, 0.0, 0), InvalidArgument);   // delta = 0
  CHECK_THROWS_AS(er_decomp(g, 2.0, 1.0, 0), InvalidArgument);   // delta = 1
}

}  // TEST_SUITE
