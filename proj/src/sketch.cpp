#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <vector>

#include "esparse/errors.hpp"
#include "esparse/projection.hpp"
#include "esparse/rng.hpp"
#include "esparse/sketch.hpp"
#include "esparse/util.hpp"

namespace esparse {

void expander_spectral_sketch_inplace(const Decomposition& dec, const Digraph& g,
                                      std::vector<double>& w,
                                      std::span<const int> tree_edges,
                                      double delta, double eps, double weight_cap,
                                      double beta, const SparsifyConfig& cfg,
                                      SparsifyTrace* trace,
                                      std::uint64_t round_key) {
  const int n = g.n;
  const std::size_t m_total = g.edges.size();
  if (w.size() != m_total) throw DimensionMismatch("weight vector size");
  if (!is_bipartite_lift(g))
    throw NotBipartiteLift("sketch rebalancing expects a bipartite lift");
  if (!(delta > 0.0 && delta < 0.01) || !(eps > 0.0 && eps < 0.01))
    throw PreconditionViolated("delta and eps must lie in (0, 1/100)");
  if (!(beta > 0.0)) throw InvalidArgument("degree floor beta must be positive");
  if (!(weight_cap > 0.0)) throw InvalidArgument("weight cap must be positive");
  for (std::size_t i = 0; i < m_total; ++i)
    if (w[i] > weight_cap * (1.0 + 1e-9))
      throw PreconditionViolated("live weight exceeds the stated cap");

  const std::size_t num_pieces = dec.pieces.size();
  if (num_pieces == 0) return;

  // Schedule smallness: conductance certificates feed the variance budget
  // through the resistance bound 1/(beta phi^2) inside high-degree cores.
  {
    double phi = dec.phi_min > 0.0 ? dec.phi_min : 1.0;
    double inner = std::max(2.0, std::log(std::max(2.0, n * weight_cap / eps)));
    double lhs = cfg.c_ess / (beta * phi * phi) *
                 std::log(std::max(2.0, n * weight_cap / (delta * eps))) *
                 std::log(inner) * std::log(inner);
    if (lhs > 1.0 + 1e-9) {
      if (cfg.strict())
        throw PreconditionViolated("expander certificate exceeds the schedule budget");
      if (trace)
        trace->warn("expander certificate exceeds the schedule budget; continuing");
    }
  }

  const std::vector<double> wsnap = w;  // shared reference for every piece

  const double nw = static_cast<double>(n) * weight_cap;
  const double ell1 = 1.0 / (2.0 * std::pow(std::log(std::max(2.0, nw / eps)), 2));
  const int tau1 = static_cast<int>(std::ceil(std::log(2.0 / ell1)));
  const double ell2 = eps / (4.0 * static_cast<double>(n) *
                             static_cast<double>(m_total) * weight_cap);
  const int tau2 = static_cast<int>(std::ceil(std::log(2.0 / ell2)));
  const double drop_below = eps / (4.0 * static_cast<double>(n) *
                                   static_cast<double>(m_total));
  const double num_pieces_d = static_cast<double>(num_pieces);

  struct PieceOut {
    std::vector<double> tree_delta;
    std::vector<int> removed;
    SparsifyTrace trace;
    std::exception_ptr error;
    bool touched = false;
  };
  std::vector<PieceOut> outs(num_pieces);

  auto run_piece = [&](std::size_t pi) {
    PieceOut& po = outs[pi];
    try {
      const Piece& piece = dec.pieces[pi];

      // High-degree core: vertices with enough piece edges attached, then
      // the edges staying inside the core. Only the core is rebalanced.
      std::vector<int> degree(g.n, 0);
      for (int id : piece.edges) {
        ++degree[g.edges[id].head];
        ++degree[g.edges[id].tail];
      }
      std::vector<int> core;
      core.reserve(piece.edges.size());
      for (int id : piece.edges) {
        const Edge& e = g.edges[id];
        if (degree[e.head] >= beta && degree[e.tail] >= beta) core.push_back(id);
      }
      if (core.empty()) return;
      std::vector<int> cverts;
      {
        std::vector<char> seen(g.n, 0);
        for (int id : core) {
          for (int v : {g.edges[id].head, g.edges[id].tail})
            if (!seen[v]) {
              seen[v] = 1;
              cverts.push_back(v);
            }
        }
      }
      if (core.size() < 40 * cverts.size()) return;  // core too sparse
      po.touched = true;
      po.tree_delta.assign(m_total, 0.0);

      double rho = 1.2 * 8.0 / (beta * std::max(piece.phi * piece.phi, 1e-300));

      auto call = [&](double ell, int tau_total, std::span<const int> fs,
                      std::uint64_t phase, int c) {
        basic_fast_sparsify_inplace(
            g, w, po.tree_delta, core, core, wsnap, wsnap, ell,
            delta / (2.0 * num_pieces_d * tau_total),
            eps / (4.0 * num_pieces_d * tau_total), fs, tree_edges, cfg,
            &po.trace, piece.wbar, rho,
            stream_key(round_key, {static_cast<std::uint64_t>(pi), phase,
                                   static_cast<std::uint64_t>(c)}));
      };

      for (int c = 0; c < tau1; ++c) call(ell1, tau1, core, 1, c);

      std::vector<int> fs;
      for (int id : core)
        if (w[id] <= ell1 * wsnap[id] * (1.0 + 1e-12)) fs.push_back(id);
      if (fs.size() * 4 >= core.size()) {
        for (int c = 0; c < tau2; ++c) call(ell2, tau2, fs, 2, c);
      } else {
        po.trace.warn("phase-one saturation fell short; refinement skipped");
      }

      for (int id : core)
        if (w[id] <= drop_below * (1.0 + 1e-12)) po.removed.push_back(id);
    } catch (...) {
      po.error = std::current_exception();
    }
  };

  bool parallel = false;
#ifdef _OPENMP
  parallel = cfg.threads != 1 && num_pieces > 1;
#endif
  if (parallel) {
#ifdef _OPENMP
    if (cfg.threads > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(cfg.threads)
      for (std::int64_t pi = 0; pi < static_cast<std::int64_t>(num_pieces); ++pi)
        run_piece(static_cast<std::size_t>(pi));
    } else {
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t pi = 0; pi < static_cast<std::int64_t>(num_pieces); ++pi)
        run_piece(static_cast<std::size_t>(pi));
    }
#endif
  } else {
    for (std::size_t pi = 0; pi < num_pieces; ++pi) run_piece(pi);
  }

  std::vector<int> removed;
  for (std::size_t pi = 0; pi < num_pieces; ++pi) {
    PieceOut& po = outs[pi];
    if (po.error) std::rethrow_exception(po.error);
    if (!po.touched) continue;
    for (int id : tree_edges) w[id] += po.tree_delta[id];
    removed.insert(removed.end(), po.removed.begin(), po.removed.end());
    if (trace) trace->merge(po.trace);
  }

  if (!removed.empty()) {
    std::sort(removed.begin(), removed.end());
    std::vector<double> zfull(m_total, 0.0);
    for (int id : removed) zfull[id] = w[id];
    std::vector<double> y = round_to_tree(g, zfull, tree_edges);
    for (int id : removed) w[id] = 0.0;
    for (int id : tree_edges) w[id] += y[id];
  }
}

namespace {

SketchResult sketch_impl(const Digraph& g, double eps, double delta,
                         const SparsifyConfig& cfg, bool require_eulerian) {
  const int n = g.n;
  const std::size_t m_orig = g.edges.size();
  if (n < 1 || m_orig == 0) throw InvalidArgument("graph must have edges");
  double hi = cfg.strict() ? 0.01 : 1.0;
  if (!(eps > 0.0 && eps < hi) || !(delta > 0.0 && delta < hi))
    throw InvalidArgument("eps and delta out of range for this profile");

  std::vector<double> w = weights_of(g);
  double u_max = 0.0, w_min = std::numeric_limits<double>::infinity();
  for (double we : w) {
    u_max = std::max(u_max, we);
    w_min = std::min(w_min, we);
  }
  if (w_min < 1.0 - 1e-12)
    throw InvalidArgument("edge weights must be at least 1");
  if (require_eulerian) {
    std::vector<double> imb = degree_imbalance(g);
    if (norm_inf(imb) > 1e-9 * norm1(w))
      throw NotEulerian("degree imbalance exceeds tolerance");
  }

  Digraph lift = bipartite_lift(g);
  Forest forest = spanning_forest(lift);
  const std::vector<int>& tree = forest.edge_ids;
  std::vector<char> in_tree(m_orig, 0);
  for (int id : tree) in_tree[id] = 1;

  SketchResult result;
  SparsifyTrace& trace = result.trace;
  const int rounds_cap =
      static_cast<int>(std::ceil(6.0 * std::log2(std::max(n, 2))));
  const double cap_growth = std::pow(std::max(cfg.c_ess, 1.0), rounds_cap);
  const double u_cap = u_max * cap_growth;

  double beta;
  if (cfg.beta_override) {
    beta = *cfg.beta_override;
  } else if (cfg.profile == Profile::Practical) {
    double l2 = std::ceil(std::log2(std::max(static_cast<double>(n), 2.0)));
    beta = std::max(8.0, std::ceil(4.0 / eps) * l2 * l2);
  } else {
    double ln_n = std::log(std::max(static_cast<double>(n), 3.0));
    double arg = std::max(2.0, static_cast<double>(n) * u_cap / delta);
    double l1 = std::log(arg);
    double ll = std::log(std::max(2.0, l1));
    beta = 400000.0 * cfg.c_ess * cfg.c_ess / (cfg.c_adk * cfg.c_adk * eps) *
           std::pow(ln_n, 6) * l1 * ll * ll;
  }

  const double threshold =
      4.0 * cfg.c_ess * static_cast<double>(n) * beta *
      std::log2(std::max(2.0, 32.0 * static_cast<double>(m_orig) *
                                  static_cast<double>(n) * u_cap / eps));

  for (int t = 0; t < rounds_cap; ++t) {
    std::vector<int> live;
    live.reserve(m_orig);
    for (std::size_t i = 0; i < m_orig; ++i)
      if (!in_tree[i] && w[i] > 0.0) live.push_back(static_cast<int>(i));
    if (static_cast<double>(live.size()) <= threshold) break;

    Decomposition dec = expander_decomp_subset(
        lift, w, live, 2.0, delta / (4.0 * rounds_cap),
        stream_key(cfg.seed, {0x65786463ull, static_cast<std::uint64_t>(t)}));

    double w_cap;
    if (cfg.profile == Profile::Practical) {
      w_cap = 0.0;
      for (std::size_t i = 0; i < m_orig; ++i) w_cap = std::max(w_cap, w[i]);
    } else {
      w_cap = u_cap;
    }

    double round_delta = delta / (4.0 * rounds_cap);
    if (round_delta >= 0.01 && !cfg.strict()) {
      trace.warn("per-round failure budget clamped to stay below 1/100");
      round_delta = 0.0099;
    }
    std::int64_t bfs_before = trace.bfs_calls;
    expander_spectral_sketch_inplace(
        dec, lift, w, tree, round_delta, eps / (4.0 * rounds_cap), w_cap, beta,
        cfg, &trace,
        stream_key(cfg.seed, {0x65737372ull, static_cast<std::uint64_t>(t)}));

    double drop_below = eps / (4.0 * static_cast<double>(m_orig) *
                               static_cast<double>(n));
    std::vector<int> gone;
    for (int id : live)
      if (w[id] > 0.0 && w[id] <= drop_below * (1.0 + 1e-12)) gone.push_back(id);
    if (!gone.empty()) {
      std::vector<double> zfull(m_orig, 0.0);
      for (int id : gone) zfull[id] = w[id];
      std::vector<double> y = round_to_tree(lift, zfull, tree);
      for (int id : gone) w[id] = 0.0;
      for (int id : tree) w[id] += y[id];
    }

    ++trace.rounds;
    std::int64_t nnz = 0;
    for (std::size_t i = 0; i < m_orig; ++i)
      if (!in_tree[i] && w[i] > 0.0) ++nnz;
    trace.round_nnz.push_back(nnz);

    if (trace.bfs_calls == bfs_before && gone.empty()) {
      trace.warn("round made no progress; cores fall below the density floor");
      break;
    }
  }

  // Unlift by index: lift edge i descends from g.edges[i].
  result.h.n = n;
  for (std::size_t i = 0; i < m_orig; ++i)
    if (w[i] > 0.0)
      result.h.edges.push_back({g.edges[i].head, g.edges[i].tail, w[i]});
  return result;
}

}  // namespace

SketchResult spectral_sketch(const Digraph& g, double eps, double delta,
                             const SparsifyConfig& cfg) {
  return sketch_impl(g, eps, delta, cfg, /*require_eulerian=*/true);
}

SketchResult undirected_sketch(const Digraph& g, double eps, double delta,
                               const SparsifyConfig& cfg) {
  // Canonical orientation toward the larger endpoint id; anti-parallel input
  // pairs merge, so quadratic forms of the undirected Laplacian carry over.
  std::vector<Edge> oriented;
  oriented.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    int a = std::min(e.head, e.tail), b = std::max(e.head, e.tail);
    oriented.push_back({a, b, e.w});
  }
  Digraph sym = build_graph(g.n, oriented);
  return sketch_impl(sym, eps / 30.0, delta, cfg, /*require_eulerian=*/false);
}

}  // namespace esparse
