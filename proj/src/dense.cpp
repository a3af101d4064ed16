#include "esparse/dense.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "esparse/errors.hpp"
#include "esparse/util.hpp"

namespace esparse::dense {

void check_gate(int n, int gate) {
  if (n > gate)
    throw InvalidArgument("dense oracle gated to n <= " + std::to_string(gate) +
                          ", got n = " + std::to_string(n));
}

Eigen::MatrixXd incidence(const Digraph& g) {
  check_gate(g.n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(g.m(), g.n);
  for (int e = 0; e < g.m(); ++e) {
    b(e, g.edges[e].head) = 1.0;
    b(e, g.edges[e].tail) = -1.0;
  }
  return b;
}

Eigen::MatrixXd dir_lap(const Digraph& g, std::span<const double> w) {
  check_gate(g.n);
  if (w.size() != g.edges.size()) throw DimensionMismatch("dir_lap weights");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int e = 0; e < g.m(); ++e) {
    l(g.edges[e].head, g.edges[e].head) += w[e];
    l(g.edges[e].tail, g.edges[e].head) -= w[e];
  }
  return l;
}

Eigen::MatrixXd und_lap(const Digraph& g, std::span<const double> w) {
  check_gate(g.n);
  if (w.size() != g.edges.size()) throw DimensionMismatch("und_lap weights");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int e = 0; e < g.m(); ++e) {
    int u = g.edges[e].head, v = g.edges[e].tail;
    l(u, u) += w[e];
    l(v, v) += w[e];
    l(u, v) -= w[e];
    l(v, u) -= w[e];
  }
  return l;
}

namespace {

void require_symmetric(const Eigen::MatrixXd& l, const char* who) {
  double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l - l.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument(std::string(who) + ": matrix is not symmetric");
}

// Shared eigendecomposition path for pinv and pinv_half.
Eigen::MatrixXd pinv_pow(const Eigen::MatrixXd& l, double expo) {
  require_symmetric(l, "pinv");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  if (es.info() != Eigen::Success) throw NoConvergence("dense eigensolver failed");
  Eigen::VectorXd ev = es.eigenvalues();
  double lmax = ev.size() ? ev.maxCoeff() : 0.0;
  double neg_tol = 1e-10 * std::max(lmax, 1.0);
  double cutoff = static_cast<double>(l.rows()) * 0x1.0p-52 * std::max(lmax, 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -neg_tol)
      throw NotPSD("eigenvalue " + std::to_string(ev(i)) + " below -" +
                   std::to_string(neg_tol));
    if (ev(i) > cutoff) inv(i) = std::pow(ev(i), expo);
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd pinv_half(const Eigen::MatrixXd& l) { return pinv_pow(l, -0.5); }
Eigen::MatrixXd pinv(const Eigen::MatrixXd& l) { return pinv_pow(l, -1.0); }

double opnorm(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues()(0);
}

double loewner_margin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd d = b - a;
  Eigen::MatrixXd sym = 0.5 * (d + d.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NoConvergence("dense eigensolver failed");
  return es.eigenvalues().minCoeff();
}

bool loewner_leq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  return loewner_margin(a, b) >= -tol * std::max(opnorm(b), 1e-300);
}

double opnorm_error(const Digraph& ref, std::span<const double> w_ref,
                    const Digraph& test, std::span<const double> w_test) {
  if (ref.n != test.n) throw DimensionMismatch("vertex counts differ");
  Eigen::MatrixXd lph = pinv_half(und_lap(ref, w_ref));
  Eigen::MatrixXd diff = dir_lap(ref, w_ref) - dir_lap(test, w_test);
  return opnorm(lph * diff * lph);
}

Eigen::MatrixXd exact_er_matrix(const Digraph& g, std::span<const double> w) {
  Eigen::MatrixXd lp = pinv(und_lap(g, w));
  Eigen::MatrixXd er(g.n, g.n);
  for (int u = 0; u < g.n; ++u)
    for (int v = 0; v < g.n; ++v)
      er(u, v) = lp(u, u) + lp(v, v) - 2.0 * lp(u, v);
  return er;
}

Eigen::MatrixXd circulation_projector(const Digraph& g, std::span<const double> w,
                                      std::span<const int> cluster_edges) {
  check_gate(g.n);
  const int f = static_cast<int>(cluster_edges.size());
  Eigen::MatrixXd bf = Eigen::MatrixXd::Zero(f, g.n);
  Eigen::VectorXd wf(f);
  for (int k = 0; k < f; ++k) {
    const Edge& e = g.edges[cluster_edges[k]];
    bf(k, e.head) = 1.0;
    bf(k, e.tail) = -1.0;
    wf(k) = w[cluster_edges[k]];
  }
  Eigen::MatrixXd l2 = bf.transpose() * wf.array().square().matrix().asDiagonal() * bf;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(f, f) -
                      wf.asDiagonal() * bf * pinv(l2) * bf.transpose() * wf.asDiagonal();
  return p;
}

Eigen::MatrixXd constrained_projector(const Digraph& g, std::span<const double> w,
                                      std::span<const int> cluster_edges,
                                      std::span<const double> v) {
  if (v.size() != cluster_edges.size())
    throw DimensionMismatch("constraint vector must be cluster-local");
  Eigen::MatrixXd p = circulation_projector(g, w, cluster_edges);
  Eigen::VectorXd vv = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  Eigen::VectorXd u = p * vv;
  double nu = u.norm();
  if (nu <= 1e-12 * vv.norm())
    throw DegenerateConstraint("constraint vector lies in the kernel of P_H");
  u /= nu;
  return p - u * u.transpose();
}

VerificationReport verify_variance_bound(const Digraph& g, std::span<const double> w,
                                         std::span<const int> cluster_edges,
                                         std::optional<double> rho, double tol) {
  check_gate(g.n);
  auto adj = build_adj(g.n, g.edges);
  auto comp = connected_components(adj);
  for (int v = 1; v < g.n; ++v)
    if (comp[v] != comp[0]) throw Disconnected("variance check needs a connected host");

  const int f = static_cast<int>(cluster_edges.size());
  if (f == 0) throw InvalidArgument("empty cluster");

  std::vector<char> in_u(g.n, 0);
  double max_w = 0.0;
  for (int id : cluster_edges) {
    in_u[g.edges[id].head] = 1;
    in_u[g.edges[id].tail] = 1;
    max_w = std::max(max_w, w[id]);
  }
  Eigen::MatrixXd er = exact_er_matrix(g, w);
  double max_er = 0.0;
  for (int u = 0; u < g.n; ++u)
    for (int v = 0; v < g.n; ++v)
      if (in_u[u] && in_u[v]) max_er = std::max(max_er, er(u, v));
  double needed = max_w * max_er;
  double rho_used = rho.value_or(needed);
  if (rho_used + 1e-12 * std::max(1.0, needed) < needed)
    throw PreconditionViolated("rho = " + std::to_string(rho_used) +
                               " below (max weight)*(max ER) = " + std::to_string(needed));

  Eigen::MatrixXd lph = pinv_half(und_lap(g, w));
  Eigen::MatrixXd p = circulation_projector(g, w, cluster_edges);

  Eigen::MatrixXd s_row = Eigen::MatrixXd::Zero(g.n, g.n);
  Eigen::MatrixXd s_col = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int c = 0; c < f; ++c) {
    Eigen::MatrixXd me = Eigen::MatrixXd::Zero(g.n, g.n);
    for (int r = 0; r < f; ++r) {
      double coef = p(r, c) * w[cluster_edges[r]];
      if (coef == 0.0) continue;
      const Edge& ef = g.edges[cluster_edges[r]];
      me(ef.head, ef.head) += coef;
      me(ef.tail, ef.head) -= coef;
    }
    Eigen::MatrixXd ae = lph * me * lph;
    s_row += ae * ae.transpose();
    s_col += ae.transpose() * ae;
  }

  Eigen::VectorXd wh(f);
  std::vector<int> ids(cluster_edges.begin(), cluster_edges.end());
  Digraph hsub;
  hsub.n = g.n;
  for (int id : ids) hsub.edges.push_back(g.edges[id]);
  std::vector<double> wsub(f);
  for (int k = 0; k < f; ++k) wsub[k] = w[ids[k]];
  Eigen::MatrixXd bound = rho_used * (lph * und_lap(hsub, wsub) * lph);

  double m_row = loewner_margin(s_row, bound);
  double m_col = loewner_margin(s_col, bound);
  double scale = std::max(opnorm(bound), 1e-300);

  VerificationReport rep;
  rep.nnz = f;
  rep.loewner_margin = std::min(m_row, m_col);
  rep.pass = rep.loewner_margin >= -tol * scale;
  rep.values = {{"rho", rho_used},
                {"rho_required", needed},
                {"margin_row", m_row},
                {"margin_col", m_col},
                {"bound_opnorm", scale}};
  rep.item_pass = {{"row_sum", m_row >= -tol * scale}, {"col_sum", m_col >= -tol * scale}};
  return rep;
}

VerificationReport verify_sparsifier(const Digraph& ref, const Digraph& test,
                                     double eps, double degree_tol) {
  if (ref.n != test.n) throw DimensionMismatch("vertex counts differ");
  auto w_ref = weights_of(ref);
  auto w_test = weights_of(test);

  VerificationReport rep;
  rep.opnorm_error = opnorm_error(ref, w_ref, test, w_test);
  rep.nnz = test.m();

  auto d_ref = degree_imbalance(ref);
  auto d_test = degree_imbalance(test);
  double dres = 0.0;
  for (int v = 0; v < ref.n; ++v) dres = std::max(dres, std::abs(d_ref[v] - d_test[v]));
  rep.degree_residual_linf = dres;

  // The undirected sandwich follows from the directed bound with a factor 2,
  // so it is checked at 2*eps.
  Eigen::MatrixXd lg = und_lap(ref, w_ref);
  Eigen::MatrixXd lh = und_lap(test, w_test);
  double lg_norm = std::max(opnorm(lg), 1e-300);
  double up = loewner_margin(lh, (1.0 + 2.0 * eps) * lg);
  double dn = loewner_margin((1.0 - 2.0 * eps) * lg, lh);
  rep.loewner_margin = std::min(up, dn) / lg_norm;

  double w1 = norm1(std::span<const double>(w_ref));
  bool ok_op = rep.opnorm_error <= eps;
  bool ok_deg = dres <= degree_tol * std::max(w1, 1e-300);
  bool ok_loewner = rep.loewner_margin >= -1e-9;
  rep.pass = ok_op && ok_deg && ok_loewner;
  rep.values = {{"eps", eps},
                {"sandwich_upper_margin", up / lg_norm},
                {"sandwich_lower_margin", dn / lg_norm},
                {"ref_nnz", static_cast<double>(ref.m())}};
  rep.item_pass = {{"opnorm", ok_op}, {"degrees", ok_deg}, {"sandwich", ok_loewner}};
  return rep;
}

PairErr sketch_pair_error(const Digraph& ref, std::span<const double> w_ref,
                          const Digraph& test, std::span<const double> w_test,
                          std::span<const double> a, std::span<const double> z,
                          double eps) {
  if (ref.n != test.n) throw DimensionMismatch("vertex counts differ");
  Eigen::Map<const Eigen::VectorXd> av(a.data(), a.size());
  Eigen::Map<const Eigen::VectorXd> zv(z.data(), z.size());
  Eigen::MatrixXd diff = dir_lap(test, w_test) - dir_lap(ref, w_ref);
  Eigen::MatrixXd lg = und_lap(ref, w_ref);
  PairErr pe;
  pe.abs_err = std::abs(av.dot(diff * zv));
  double na = std::sqrt(std::max(0.0, av.dot(lg * av)));
  double nz = std::sqrt(std::max(0.0, zv.dot(lg * zv)));
  pe.bound = eps * na * nz;
  pe.pass = pe.abs_err <= pe.bound;
  return pe;
}

}  // namespace esparse::dense
