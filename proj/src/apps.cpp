#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "esparse/apps.hpp"
#include "esparse/dense.hpp"
#include "esparse/errors.hpp"
#include "esparse/rng.hpp"
#include "esparse/solver.hpp"
#include "esparse/util.hpp"

namespace esparse {

namespace {

void subtract_mean(std::vector<double>& v) {
  KahanSum s;
  for (double x : v) s.add(x);
  double mean = s.value() / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

// Extreme eigenvalue ratio of the conjugate gradient tridiagonal; the usual
// Lanczos coefficients reconstructed from the step and direction updates.
double ritz_condition(const std::vector<double>& alphas,
                      const std::vector<double>& betas) {
  int k = static_cast<int>(alphas.size());
  if (k == 0) return 0.0;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = 1.0 / alphas[i];
    if (i > 0) t(i, i) += betas[i - 1] / alphas[i - 1];
    if (i + 1 < k) {
      double off = std::sqrt(std::max(betas[i], 0.0)) / alphas[i];
      t(i, i + 1) = off;
      t(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  double lo = es.eigenvalues()(0), hi = es.eigenvalues()(k - 1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

EulerianSolveResult eulerian_solve(const Digraph& g, std::span<const double> b,
                                   double eps, const SparsifyConfig& cfg) {
  const int n = g.n;
  if (static_cast<int>(b.size()) != n)
    throw DimensionMismatch("right-hand side length");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("eps must lie in (0,1)");
  if (g.edges.empty()) throw InvalidArgument("graph must have edges");

  std::vector<double> wg = weights_of(g);
  {
    std::vector<double> imb = degree_imbalance(g);
    if (norm_inf(imb) > 1e-9 * norm1(wg))
      throw NotEulerian("degree imbalance exceeds tolerance");
  }
  {
    AdjView adj = build_adj(g.n, g.edges);
    std::vector<int> comp = connected_components(adj);
    for (int c : comp)
      if (c != 0) throw Disconnected("solver requires a connected graph");
  }
  {
    KahanSum s;
    for (double x : b) s.add(x);
    if (std::abs(s.value()) > 1e-9 * std::max(1.0, norm1(b)))
      throw InvalidArgument("right-hand side must sum to zero");
  }

  EulerianSolveResult out;
  out.x.assign(n, 0.0);
  if (norm2(b) == 0.0) {
    out.achieved_error = 0.0;
    return out;
  }

  // Preconditioner: one sparsification pass at fixed accuracy, then a
  // polynomial approximation of the undirected pseudoinverse. Weights are
  // scaled up front so the sparsifier's unit floor never binds; conjugate
  // gradient is invariant to that scale.
  double w_min = *std::min_element(wg.begin(), wg.end());
  Digraph scaled = g;
  if (w_min < 1.0) {
    for (Edge& e : scaled.edges) e.w /= w_min;
  }
  SparsifyResult sp = fast_sparsify(scaled, 0.25, 0.01, cfg);
  out.preconditioner_nnz = static_cast<std::int64_t>(sp.h.edges.size());
  std::vector<double> wh = weights_of(sp.h);
  LapSolver::Opts sopts;
  sopts.seed = stream_key(cfg.seed, {0x65736f6cull});
  LapSolver hsolver = LapSolver::for_graph(sp.h, wh, sopts);
  LinOp m = hsolver.linear_operator(0.1);

  std::vector<double> tmp_m(n), tmp_e(n);
  auto apply_a = [&](const std::vector<double>& x, std::vector<double>& y) {
    apply_dir_lap(g, wg, x, tmp_e);
    std::vector<double> mm = m.apply(tmp_e);
    apply_dir_lap_transpose(g, wg, mm, y);
  };

  std::vector<double> rhs(n);
  {
    std::vector<double> bb(b.begin(), b.end());
    std::vector<double> mb = m.apply(bb);
    apply_dir_lap_transpose(g, wg, mb, rhs);
    subtract_mean(rhs);
  }
  double rhs_norm = norm2(rhs);

  std::vector<double>& x = out.x;
  std::vector<double> r = rhs, p = rhs, ap(n);
  double rr = dot(r, r);
  std::vector<double> alphas, betas;
  const int cap = 20 * n + 1000;
  double tol = std::max(eps * 1e-3, 1e-13) * rhs_norm;
  int attempts = 0;

  for (;;) {
    while (std::sqrt(rr) > tol && out.iterations < cap) {
      apply_a(p, ap);
      double pap = dot(p, ap);
      if (!(pap > 0.0)) break;  // lost positive curvature; accept iterate
      double alpha = rr / pap;
      alphas.push_back(alpha);
      axpy(alpha, p, x);
      axpy(-alpha, ap, r);
      subtract_mean(r);
      double rr_new = dot(r, r);
      double beta = rr_new / rr;
      betas.push_back(beta);
      rr = rr_new;
      for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
      ++out.iterations;
    }
    subtract_mean(x);

    if (n > dense::kDefaultGate) break;
    Eigen::MatrixXd vl = dense::dir_lap(g, wg);
    Eigen::VectorXd bb(n);
    for (int i = 0; i < n; ++i) bb(i) = b[i];
    // directed Laplacian is rank n-1 and not symmetric; the minimum-norm
    // least-squares solution is the reference since b is orthogonal to 1
    Eigen::VectorXd xs = vl.completeOrthogonalDecomposition().solve(bb);
    xs.array() -= xs.mean();
    Eigen::MatrixXd lu = dense::und_lap(g, wg);
    Eigen::VectorXd xv(n);
    for (int i = 0; i < n; ++i) xv(i) = x[i];
    Eigen::VectorXd d = xv - xs;
    double num = std::sqrt(std::max(0.0, d.dot(lu * d)));
    double den = std::sqrt(std::max(0.0, xs.dot(lu * xs)));
    out.achieved_error = den > 0.0 ? num / den : num;
    if (*out.achieved_error <= eps || attempts >= 2 || out.iterations >= cap)
      break;
    tol *= 1e-2;  // oracle says not there yet; resume with a tighter target
    ++attempts;
  }

  if (std::sqrt(rr) > 10.0 * std::max(tol, 1e-13 * rhs_norm) &&
      out.iterations >= cap)
    throw NoConvergence("conjugate gradient stalled at residual " +
                        std::to_string(std::sqrt(rr) / std::max(rhs_norm, 1e-300)));

  out.condition_estimate = ritz_condition(alphas, betas);
  return out;
}

StationaryResult stationary_distribution(const Digraph& chain, double eps,
                                         const SparsifyConfig& cfg) {
  const int n = chain.n;
  const std::size_t m = chain.edges.size();
  if (n < 1 || m == 0) throw InvalidArgument("chain must have edges");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("eps must lie in (0,1)");

  // Self-loops cannot be represented as edges, and lazy mass never moves the
  // stationary vector, so rows may sum to less than one: the deficit is an
  // implicit self-loop. s holds the explicit (moving) mass per state.
  std::vector<double> s(n, 0.0);
  {
    std::vector<KahanSum> row(n);
    for (const Edge& e : chain.edges) row[e.head].add(e.w);
    for (int v = 0; v < n; ++v) {
      s[v] = row[v].value();
      if (s[v] > 1.0 + 1e-8)
        throw InvalidArgument("row " + std::to_string(v) + " sums past one");
      if (!(s[v] > 0.0))
        throw InvalidArgument("state " + std::to_string(v) +
                              " has no outgoing probability");
      s[v] = std::min(s[v], 1.0);
    }
  }
  {
    // Strong connectivity: forward and backward reachability from vertex 0.
    std::vector<std::vector<int>> fwd(n), bwd(n);
    for (const Edge& e : chain.edges) {
      fwd[e.head].push_back(e.tail);
      bwd[e.tail].push_back(e.head);
    }
    for (const auto& adj : {fwd, bwd}) {
      std::vector<char> seen(n, 0);
      std::vector<int> stack{0};
      seen[0] = 1;
      int cnt = 1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : adj[v])
          if (!seen[u]) {
            seen[u] = 1;
            ++cnt;
            stack.push_back(u);
          }
      }
      if (cnt != n) throw NotIrreducible("chain is not strongly connected");
    }
  }

  std::vector<double> pi(n, 1.0 / n);
  // S is the explicit transition mass; the full kernel is S + diag(1 - s).
  auto apply_st = [&](const std::vector<double>& v, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (const Edge& e : chain.edges) y[e.tail] += e.w * v[e.head];
  };
  auto apply_s = [&](const std::vector<double>& v, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (const Edge& e : chain.edges) y[e.head] += e.w * v[e.tail];
  };
  auto normalize = [&](std::vector<double>& v) {
    for (double& x : v) x = std::max(x, 0.0);
    double mass = norm1(v);
    if (!(mass > 0.0))
      throw Error("InternalInvariant", "distribution mass vanished");
    for (double& x : v) x /= mass;
  };

  StationaryResult out;
  const double tol = std::max(eps * 1e-3, 1e-14);
  std::vector<double> tmp(n), r(n);
  double resid = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < 60; ++outer) {
    for (int k = 0; k < 2; ++k) {
      apply_st(pi, tmp);
      for (int i = 0; i < n; ++i) tmp[i] += (1.0 - s[i]) * pi[i];
      pi.swap(tmp);
      normalize(pi);
    }
    apply_st(pi, tmp);
    for (int i = 0; i < n; ++i) r[i] = s[i] * pi[i] - tmp[i];
    resid = norm2(r);
    if (resid <= tol) break;

    // Correction: least-squares solve of (I - P^T) delta = r, which reduces
    // to (diag(s) - S^T) delta = r, by conjugate gradient on the normal
    // equations, preconditioned with the undirected Laplacian of the chain
    // rescaled by the current estimate.
    std::vector<double> wre(m);
    for (std::size_t i = 0; i < m; ++i)
      wre[i] = pi[chain.edges[i].head] * chain.edges[i].w;
    LapSolver::Opts sopts;
    sopts.seed = stream_key(cfg.seed, {0x73746174ull,
                                       static_cast<std::uint64_t>(outer)});
    sopts.throw_on_stall = false;
    LapSolver lsolve = LapSolver::for_graph(chain, wre, sopts);
    LinOp prec = lsolve.linear_operator(0.25);

    auto apply_n = [&](const std::vector<double>& v, std::vector<double>& y) {
      // (diag(s) - S)(diag(s) - S^T) v
      apply_st(v, tmp);
      std::vector<double> mid(n);
      for (int i = 0; i < n; ++i) mid[i] = s[i] * v[i] - tmp[i];
      apply_s(mid, tmp);
      for (int i = 0; i < n; ++i) y[i] = s[i] * mid[i] - tmp[i];
    };

    std::vector<double> atr(n);
    apply_s(r, tmp);
    for (int i = 0; i < n; ++i) atr[i] = s[i] * r[i] - tmp[i];

    std::vector<double> delta(n, 0.0), res = atr;
    std::vector<double> z = prec.apply(res), p = z, np(n);
    double rz = dot(res, z);
    double atr_norm = norm2(atr);
    int inner_cap = 4 * n + 200;
    for (int it = 0; it < inner_cap && norm2(res) > 1e-10 * atr_norm; ++it) {
      apply_n(p, np);
      double pnp = dot(p, np);
      if (!(pnp > 0.0)) break;
      double alpha = rz / pnp;
      axpy(alpha, p, delta);
      axpy(-alpha, np, res);
      z = prec.apply(res);
      double rz_new = dot(res, z);
      double beta = rz_new / rz;
      rz = rz_new;
      for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      ++out.iterations;
    }

    for (int i = 0; i < n; ++i) pi[i] -= delta[i];
    normalize(pi);
  }

  apply_st(pi, tmp);
  for (int i = 0; i < n; ++i) r[i] = s[i] * pi[i] - tmp[i];
  resid = norm2(r);
  if (resid > tol)
    throw NoConvergence("stationary residual stalled at " +
                        std::to_string(resid));
  out.pi = std::move(pi);
  out.residual = resid;
  return out;
}

}  // namespace esparse
