#include "esparse/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "esparse/dense.hpp"
#include "esparse/errors.hpp"
#include "esparse/resistance.hpp"
#include "esparse/util.hpp"

namespace esparse {

RegionGrowResult region_grow(const Digraph& g, std::span<const int> eids,
                             std::span<const double> len, std::span<const double> wm,
                             double d) {
  if (len.size() != eids.size() || wm.size() != eids.size())
    throw DimensionMismatch("region_grow arrays");
  if (!(d > 0.0)) throw InvalidArgument("region_grow needs d > 0");
  for (size_t k = 0; k < eids.size(); ++k) {
    if (len[k] < 0.0 || wm[k] < 0.0)
      throw InvalidArgument("lengths and masked weights must be nonnegative");
  }
  const int n = g.n;
  AdjView adj = build_adj_subset(g, eids);

  RegionGrowResult res;
  res.label.assign(n, -1);
  {
    KahanSum vol;
    for (size_t k = 0; k < eids.size(); ++k) vol.add(wm[k] * len[k]);
    res.vol_total = vol.value();
  }
  const double seed_vol = res.vol_total / n;
  const double radius_cap = d * std::log(static_cast<double>(n) + 1.0);

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> touched;
  // (distance, vertex) with lexicographic order makes the growth and its
  // tie-breaking deterministic.
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;

  for (int s = 0; s < n; ++s) {
    if (res.label[s] >= 0) continue;
    const int rid = res.num_regions;
    double cut_w = 0.0, cut_wd = 0.0;
    KahanSum vol_int;
    double radius = 0.0;
    bool open = true;

    dist[s] = 0.0;
    touched.push_back(s);
    heap.push({0.0, s});
    while (!heap.empty()) {
      auto [r, x] = heap.top();
      heap.pop();
      if (res.label[x] >= 0 || r > dist[x]) continue;
      if (x != s) {
        // Crossing edges at radius r have earned at most their full length,
        // since an endpoint closer than r - len would already be inside.
        double vol_r = seed_vol + vol_int.value() + r * cut_w - cut_wd;
        if (cut_w <= vol_r / d) {
          open = false;
          break;
        }
      }
      res.label[x] = rid;
      radius = r;
      for (int k = adj.off[x]; k < adj.off[x + 1]; ++k) {
        int y = adj.nbr[k];
        int el = adj.eid[k];
        if (res.label[y] == rid) {
          // Became internal: retract its crossing contribution from y's add.
          vol_int.add(wm[el] * len[el]);
          cut_w -= wm[el];
          cut_wd -= wm[el] * dist[y];
        } else if (res.label[y] < 0) {
          cut_w += wm[el];
          cut_wd += wm[el] * r;
          double nd = r + len[el];
          if (nd < dist[y]) {
            if (!std::isfinite(dist[y])) touched.push_back(y);
            dist[y] = nd;
            heap.push({nd, y});
          }
        }
        // Edges into previously carved regions were charged as their cut.
      }
    }
    if (open) {
      // Heap drained: the ball swallowed everything reachable, cut is the
      // weight toward already-carved regions only, counted there.
    }
    while (!heap.empty()) heap.pop();
    for (int v : touched) dist[v] = std::numeric_limits<double>::infinity();
    touched.clear();

    if (radius > radius_cap * (1.0 + 1e-9))
      throw Error("InternalInvariant",
                  "region radius " + std::to_string(radius) + " exceeds certified cap " +
                      std::to_string(radius_cap));
    res.radius.push_back(radius);
    ++res.num_regions;
  }

  KahanSum cut_sum;
  for (size_t k = 0; k < eids.size(); ++k) {
    const Edge& e = g.edges[eids[k]];
    if (res.label[e.head] != res.label[e.tail]) {
      res.cut_local.push_back(static_cast<int>(k));
      cut_sum.add(wm[k]);
    }
  }
  res.cut_weight = cut_sum.value();
  return res;
}

RegionGrowResult region_grow(const Digraph& g, std::span<const double> len,
                             std::span<const double> wm, double d) {
  std::vector<int> all(g.edges.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return region_grow(g, all, len, wm, d);
}

namespace {

// Bucket index j with w in (r^{j-1}, r^j]; the epsilon guards exact powers.
int bucket_of(double w, double r) {
  return static_cast<int>(std::ceil(std::log(w) / std::log(r) - 1e-12));
}

}  // namespace

Decomposition er_decomp_subset(const Digraph& g, std::span<const double> w,
                               std::span<const int> eids, double r, double delta,
                               std::uint64_t seed) {
  if (!(r > 1.0)) throw InvalidArgument("bucket ratio must exceed 1");
  Decomposition dec;
  dec.kind = DecompKind::EffectiveResistance;
  dec.ratio = r;
  const int n = g.n;
  const auto m = static_cast<double>(eids.size());
  if (eids.empty()) return dec;

  std::vector<double> rt = er_overestimate_subset(g, w, eids, delta, seed);

  double wmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
  for (int id : eids) {
    wmin = std::min(wmin, w[id]);
    wmax = std::max(wmax, w[id]);
  }
  int jmin = bucket_of(wmin, r), jmax = bucket_of(wmax, r);
  dec.coverage = jmax - jmin + 1;
  const double logn1 = std::log(static_cast<double>(n) + 1.0);
  const double alpha = 16.0 * r * n * logn1 / m;
  dec.rho = 8.0 * r * n * logn1 / m;

  std::vector<std::vector<int>> buckets(jmax - jmin + 1);
  for (size_t k = 0; k < eids.size(); ++k)
    buckets[bucket_of(w[eids[k]], r) - jmin].push_back(static_cast<int>(k));

  for (int bj = 0; bj <= jmax - jmin; ++bj) {
    const auto& bucket = buckets[bj];
    if (bucket.empty()) continue;
    double vj = std::pow(r, jmin + bj);
    double dpar = alpha / (2.0 * vj * logn1);

    std::vector<int> ids;
    std::vector<double> len, wm;
    ids.reserve(bucket.size());
    for (int k : bucket) {
      ids.push_back(eids[k]);
      len.push_back(rt[k]);
      wm.push_back(w[eids[k]]);
    }
    RegionGrowResult rg = region_grow(g, ids, len, wm, dpar);

    std::vector<std::vector<int>> region_edges(rg.num_regions);
    for (size_t k = 0; k < ids.size(); ++k) {
      const Edge& e = g.edges[ids[k]];
      if (rg.label[e.head] == rg.label[e.tail])
        region_edges[rg.label[e.head]].push_back(ids[k]);
      else
        dec.cut_edges.push_back(ids[k]);
    }
    for (auto& redges : region_edges) {
      if (redges.empty()) continue;
      Piece p;
      p.edges = std::move(redges);
      p.wbar = vj / r;
      std::vector<int> vs;
      for (int id : p.edges) {
        vs.push_back(g.edges[id].head);
        vs.push_back(g.edges[id].tail);
      }
      std::sort(vs.begin(), vs.end());
      vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
      p.vertices = std::move(vs);
      dec.pieces.push_back(std::move(p));
    }
  }
  std::sort(dec.cut_edges.begin(), dec.cut_edges.end());
  return dec;
}

Decomposition er_decomp(const Digraph& g, double r, double delta, std::uint64_t seed) {
  auto adj = build_adj(g.n, g.edges);
  auto comp = connected_components(adj);
  for (int v = 1; v < g.n; ++v)
    if (comp[v] != comp[0]) throw Disconnected("er_decomp requires a connected graph");
  auto w = weights_of(g);
  std::vector<int> all(g.edges.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return er_decomp_subset(g, w, all, r, delta, seed);
}

VerificationReport verify_decomposition(const Digraph& g, std::span<const double> w,
                                        const Decomposition& d) {
  VerificationReport rep;
  size_t covered = 0;
  bool ratio_ok = true, cert_ok = true, partition_ok = true, coverage_ok = true;
  double worst_ratio = 0.0, worst_cert = 0.0;

  std::vector<int> owner(g.edges.size(), -1);
  for (size_t pi = 0; pi < d.pieces.size(); ++pi)
    for (int id : d.pieces[pi].edges) {
      if (owner[id] != -1) partition_ok = false;
      owner[id] = static_cast<int>(pi);
      ++covered;
    }
  for (int id : d.cut_edges) {
    if (owner[id] != -1) partition_ok = false;
    owner[id] = static_cast<int>(d.pieces.size());
    ++covered;
  }
  if (covered != g.edges.size()) partition_ok = false;

  // Per-vertex appearances across pieces, against the scale count J.
  std::vector<int> appearances(g.n, 0);
  for (const Piece& p : d.pieces)
    for (int v : p.vertices) ++appearances[v];
  int max_appear = 0;
  for (int v = 0; v < g.n; ++v) max_appear = std::max(max_appear, appearances[v]);
  double wmin = std::numeric_limits<double>::infinity(), wmax = 1.0;
  for (size_t i = 0; i < g.edges.size(); ++i) {
    wmin = std::min(wmin, w[i]);
    wmax = std::max(wmax, w[i]);
  }
  double jbound = g.edges.empty()
                      ? 3.0
                      : std::log(std::max(wmax / wmin, 1.0)) / std::log(std::max(d.ratio, 1.0 + 1e-12)) + 3.0;
  coverage_ok = max_appear <= jbound && d.coverage <= jbound;

  bool er_kind = d.kind == DecompKind::EffectiveResistance;
  Eigen::MatrixXd er;
  if (er_kind && !d.pieces.empty()) er = dense::exact_er_matrix(g, w);

  for (const Piece& p : d.pieces) {
    double pw_min = std::numeric_limits<double>::infinity(), pw_max = 0.0;
    for (int id : p.edges) {
      pw_min = std::min(pw_min, w[id]);
      pw_max = std::max(pw_max, w[id]);
    }
    worst_ratio = std::max(worst_ratio, pw_max / pw_min);
    if (pw_max > d.ratio * pw_min * (1.0 + 1e-9)) ratio_ok = false;

    if (er_kind) {
      double diam = 0.0;
      for (int a : p.vertices)
        for (int b : p.vertices) diam = std::max(diam, er(a, b));
      worst_cert = std::max(worst_cert, pw_max * diam);
      if (pw_max * diam > d.rho * (1.0 + 1e-9)) cert_ok = false;
    } else {
      // Dense lambda_2 of the piece's normalized Laplacian vs phi^2/2.
      Digraph sub;
      sub.n = static_cast<int>(p.vertices.size());
      std::vector<double> sw;
      std::vector<int> local(g.n, -1);
      for (size_t i = 0; i < p.vertices.size(); ++i) local[p.vertices[i]] = static_cast<int>(i);
      for (int id : p.edges) {
        sub.edges.push_back({local[g.edges[id].head], local[g.edges[id].tail], w[id]});
        sw.push_back(w[id]);
      }
      Eigen::MatrixXd l = dense::und_lap(sub, sw);
      Eigen::VectorXd deg = l.diagonal();
      Eigen::VectorXd dinv = deg.unaryExpr([](double x) { return x > 0 ? 1.0 / std::sqrt(x) : 0.0; });
      Eigen::MatrixXd nl = dinv.asDiagonal() * l * dinv.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nl);
      double l2 = sub.n >= 2 ? es.eigenvalues()(1) : 1.0;
      if (l2 + 1e-9 < p.phi * p.phi / 2.0) cert_ok = false;
      worst_cert = std::max(worst_cert, p.phi * p.phi / 2.0 - l2);
    }
  }

  double cut_frac = g.edges.empty() ? 0.0
                                    : static_cast<double>(d.cut_edges.size()) /
                                          static_cast<double>(g.edges.size());
  bool cut_ok = d.cut_edges.size() * 2 <= g.edges.size();

  rep.nnz = static_cast<std::int64_t>(g.edges.size() - d.cut_edges.size());
  rep.pass = ratio_ok && cert_ok && partition_ok && coverage_ok && cut_ok;
  rep.values = {{"worst_ratio", worst_ratio},
                {"worst_certificate", worst_cert},
                {"cut_fraction", cut_frac},
                {"max_vertex_appearances", static_cast<double>(max_appear)},
                {"scale_bound", jbound}};
  rep.item_pass = {{"ratio", ratio_ok},
                   {"certificate", cert_ok},
                   {"partition", partition_ok},
                   {"coverage", coverage_ok},
                   {"cut", cut_ok}};
  return rep;
}

}  // namespace esparse
