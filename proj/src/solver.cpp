#include "esparse/solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "esparse/errors.hpp"
#include "esparse/rng.hpp"
#include "esparse/util.hpp"

namespace esparse {

LapSolver::LapSolver(int n, std::vector<WEdge> edges, Opts opts)
    : n_(n), opts_(opts) {
  off_.assign(n + 1, 0);
  for (const WEdge& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n || e.u == e.v)
      throw InvalidArgument("bad solver edge");
    if (!(e.w > 0.0)) throw NonPositiveWeight("solver edge weight");
    ++off_[e.u + 1];
    ++off_[e.v + 1];
  }
  for (int v = 0; v < n; ++v) off_[v + 1] += off_[v];
  nbr_.resize(off_[n]);
  wgt_.resize(off_[n]);
  std::vector<int> cur(off_.begin(), off_.end() - 1);
  for (const WEdge& e : edges) {
    nbr_[cur[e.u]] = e.v;
    wgt_[cur[e.u]++] = e.w;
    nbr_[cur[e.v]] = e.u;
    wgt_[cur[e.v]++] = e.w;
  }
  has_edges_ = !edges.empty();

  deg_.assign(n, 0.0);
  for (int v = 0; v < n; ++v)
    for (int k = off_[v]; k < off_[v + 1]; ++k) deg_[v] += wgt_[k];
  dinv_sqrt_.assign(n, 0.0);
  for (int v = 0; v < n; ++v)
    if (deg_[v] > 0.0) dinv_sqrt_[v] = 1.0 / std::sqrt(deg_[v]);

  comp_.assign(n, -1);
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp_[s] >= 0) continue;
    comp_[s] = num_comps_;
    stack.push_back(s);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int k = off_[v]; k < off_[v + 1]; ++k)
        if (comp_[nbr_[k]] < 0) {
          comp_[nbr_[k]] = num_comps_;
          stack.push_back(nbr_[k]);
        }
    }
    ++num_comps_;
  }

  kernel_.assign(n, 0.0);
  comp_has_kernel_.assign(num_comps_, 0);
  std::vector<double> vol(num_comps_, 0.0);
  for (int v = 0; v < n; ++v) vol[comp_[v]] += deg_[v];
  for (int v = 0; v < n; ++v)
    if (vol[comp_[v]] > 0.0) {
      kernel_[v] = std::sqrt(deg_[v] / vol[comp_[v]]);
      comp_has_kernel_[comp_[v]] = 1;
    }

  if (has_edges_) {
    double best = 2.0;
    for (int r = 0; r < std::max(1, opts_.lanczos_restarts); ++r) {
      double theta = lanczos_smallest_ritz(stream_key(opts_.seed, {0x6c616eull, static_cast<uint64_t>(r)}));
      best = std::min(best, theta);
    }
    lambda2_est_ = std::max(best, 1e-12);
    lambda2_lb_ = std::max(opts_.lambda_safety * lambda2_est_, 1e-13);
  }
}

LapSolver LapSolver::for_graph(const Digraph& g, std::span<const double> w, Opts opts) {
  std::vector<WEdge> es;
  es.reserve(g.edges.size());
  for (size_t i = 0; i < g.edges.size(); ++i)
    if (w[i] > 0.0) es.push_back({g.edges[i].head, g.edges[i].tail, w[i]});
  return LapSolver(g.n, std::move(es), opts);
}

LapSolver LapSolver::for_subset(const Digraph& g, std::span<const double> w,
                                std::span<const int> eids, Opts opts) {
  std::vector<WEdge> es;
  es.reserve(eids.size());
  for (int id : eids)
    if (w[id] > 0.0) es.push_back({g.edges[id].head, g.edges[id].tail, w[id]});
  return LapSolver(g.n, std::move(es), opts);
}

void LapSolver::apply(std::span<const double> x, std::span<double> y) const {
  const int n = n_;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    double acc = deg_[v] * x[v];
    for (int k = off_[v]; k < off_[v + 1]; ++k) acc -= wgt_[k] * x[nbr_[k]];
    y[v] = acc;
  }
}

void LapSolver::apply_normalized(std::span<const double> x, std::span<double> y) const {
  const int n = n_;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    if (deg_[v] <= 0.0) {
      y[v] = 0.0;
      continue;
    }
    double acc = x[v] * deg_[v] * dinv_sqrt_[v];
    for (int k = off_[v]; k < off_[v + 1]; ++k)
      acc -= wgt_[k] * dinv_sqrt_[nbr_[k]] * x[nbr_[k]];
    y[v] = dinv_sqrt_[v] * acc;
  }
}

void LapSolver::project_kernel(std::span<double> x) const {
  std::vector<double> dots(num_comps_, 0.0);
  for (int v = 0; v < n_; ++v) dots[comp_[v]] += kernel_[v] * x[v];
  for (int v = 0; v < n_; ++v)
    if (comp_has_kernel_[comp_[v]]) x[v] -= dots[comp_[v]] * kernel_[v];
}

double LapSolver::lanczos_smallest_ritz(std::uint64_t key) const {
  const int n = n_;
  int iters = std::min(opts_.lanczos_iters, std::max(2, n));
  RngStream rng(key);
  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> v(n), w(n);
  for (int i = 0; i < n; ++i) v[i] = rng.gauss();
  project_kernel(v);
  double nv = norm2(v);
  if (nv < 1e-300) return 2.0;
  for (double& x : v) x /= nv;

  for (int j = 0; j < iters; ++j) {
    basis.push_back(v);
    apply_normalized(v, w);
    double a = dot(std::span<const double>(w), std::span<const double>(v));
    alpha.push_back(a);
    for (int i = 0; i < n; ++i) w[i] -= a * v[i];
    if (j > 0)
      for (int i = 0; i < n; ++i) w[i] -= beta[j - 1] * basis[j - 1][i];
    // Full reorthogonalization; the basis is small and the estimate feeds a
    // stopping rule, so drift matters more than speed here.
    for (const auto& q : basis) {
      double d = dot(std::span<const double>(w), std::span<const double>(q));
      for (int i = 0; i < n; ++i) w[i] -= d * q[i];
    }
    project_kernel(w);
    double b = norm2(w);
    if (b < 1e-14 || j == iters - 1) break;
    beta.push_back(b);
    for (int i = 0; i < n; ++i) v[i] = w[i] / b;
  }

  int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < k) {
      t(i, i + 1) = beta[i];
      t(i + 1, i) = beta[i];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  return std::max(es.eigenvalues().minCoeff(), 0.0);
}

std::vector<double> LapSolver::solve(std::span<const double> b, double xi,
                                     double* achieved_rel) const {
  if (b.size() != static_cast<size_t>(n_)) throw DimensionMismatch("solve rhs");
  std::vector<double> bt(n_);
  for (int v = 0; v < n_; ++v) bt[v] = dinv_sqrt_[v] * b[v];
  project_kernel(bt);
  double nb = norm2(bt);
  std::vector<double> x(n_, 0.0);
  if (nb < 1e-300 || !has_edges_) {
    if (achieved_rel) *achieved_rel = 0.0;
    return x;
  }

  double target = std::max(xi * nb * std::sqrt(lambda2_lb_ / 2.0), opts_.floor_rel * nb);
  std::vector<double> r(bt), p(bt), q(n_);
  double rr = nb * nb;
  int max_iters = opts_.max_iters_per_n * n_ + opts_.max_iters_base;
  double rnorm = nb;
  for (int it = 0; it < max_iters && rnorm > target; ++it) {
    apply_normalized(p, q);
    double pq = dot(std::span<const double>(p), std::span<const double>(q));
    if (pq <= 0.0) break;
    double a = rr / pq;
    for (int v = 0; v < n_; ++v) {
      x[v] += a * p[v];
      r[v] -= a * q[v];
    }
    project_kernel(r);
    double rr_new = 0.0;
    for (double t : r) rr_new += t * t;
    double beta = rr_new / rr;
    rr = rr_new;
    rnorm = std::sqrt(rr);
    for (int v = 0; v < n_; ++v) p[v] = r[v] + beta * p[v];
  }
  if (achieved_rel) *achieved_rel = rnorm / nb;
  if (rnorm > target && opts_.throw_on_stall && rnorm > 10.0 * target)
    throw NoConvergence("pcg stalled at relative residual " + std::to_string(rnorm / nb));

  std::vector<double> out(n_);
  for (int v = 0; v < n_; ++v) out[v] = dinv_sqrt_[v] * x[v];
  // Mean-center per component so the advertised x perp 1 holds.
  std::vector<double> mean(num_comps_, 0.0);
  std::vector<int> cnt(num_comps_, 0);
  for (int v = 0; v < n_; ++v) {
    mean[comp_[v]] += out[v];
    ++cnt[comp_[v]];
  }
  for (int c = 0; c < num_comps_; ++c)
    if (cnt[c] > 0) mean[c] /= cnt[c];
  for (int v = 0; v < n_; ++v) out[v] -= mean[comp_[v]];
  return out;
}

LinOp LapSolver::linear_operator(double xi) const {
  LinOp op;
  op.s_ = this;
  op.lo_ = lambda2_lb_;
  op.hi_ = 2.0;
  double kappa = op.hi_ / op.lo_;
  double q = (std::sqrt(kappa) + 1.0) / (std::sqrt(kappa) - 1.0);
  int k = static_cast<int>(std::ceil(std::log(2.0 / xi) / std::log(q))) + 1;
  op.k_ = std::clamp(k, 2, 6000);
  return op;
}

std::vector<double> LinOp::apply(std::span<const double> b) const {
  const LapSolver& s = *s_;
  const int n = s.n_;
  if (b.size() != static_cast<size_t>(n)) throw DimensionMismatch("linop rhs");
  std::vector<double> bt(n);
  for (int v = 0; v < n; ++v) bt[v] = s.dinv_sqrt_[v] * b[v];
  s.project_kernel(bt);

  // Chebyshev semi-iteration on [lo, hi]: x_k = p_k(N) b with a fixed
  // polynomial, hence symmetric and linear in b.
  double theta = 0.5 * (hi_ + lo_), delta = 0.5 * (hi_ - lo_);
  std::vector<double> x(n, 0.0), r(bt), d(n), q(n);
  double sigma = theta / delta;
  double rho = 1.0 / sigma;
  for (int v = 0; v < n; ++v) d[v] = r[v] / theta;
  for (int it = 0; it < k_; ++it) {
    for (int v = 0; v < n; ++v) x[v] += d[v];
    s.apply_normalized(d, q);
    for (int v = 0; v < n; ++v) r[v] -= q[v];
    double rho_next = 1.0 / (2.0 * sigma - rho);
    for (int v = 0; v < n; ++v) d[v] = rho_next * rho * d[v] + (2.0 * rho_next / delta) * r[v];
    rho = rho_next;
  }
  s.project_kernel(x);
  std::vector<double> out(n);
  for (int v = 0; v < n; ++v) out[v] = s.dinv_sqrt_[v] * x[v];
  return out;
}

}  // namespace esparse
