#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "esparse/graph.hpp"
#include "esparse/report.hpp"

// Dense verification oracle. Everything here is O(n^3) eigensolver work on
// explicit matrices; it exists to certify the sparse pipeline, not to scale,
// and is gated to n <= 512 unless the caller raises the limit explicitly.
namespace esparse::dense {

inline constexpr int kDefaultGate = 512;

void check_gate(int n, int gate = kDefaultGate);

// Signed incidence, m x n: row e carries +1 at head(e), -1 at tail(e).
Eigen::MatrixXd incidence(const Digraph& g);

// Directed Laplacian D_out - A^T.
Eigen::MatrixXd dir_lap(const Digraph& g, std::span<const double> w);

// Undirected Laplacian B^T W B.
Eigen::MatrixXd und_lap(const Digraph& g, std::span<const double> w);

// Moore-Penrose pseudoinverse square root of a PSD matrix. Eigenvalues below
// n * 2^-52 * lambda_max are treated as kernel; an eigenvalue below
// -1e-10 * max(lambda_max, 1) throws NotPSD.
Eigen::MatrixXd pinv_half(const Eigen::MatrixXd& L);
Eigen::MatrixXd pinv(const Eigen::MatrixXd& L);

// Largest singular value.
double opnorm(const Eigen::MatrixXd& a);

// Smallest eigenvalue of the symmetrized difference b - a.
double loewner_margin(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// a <= b in the Loewner order, up to tol * ||b||_op.
bool loewner_leq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                 double tol = 1e-10);

// || L_G^{+/2} (vL_G - vL_H) L_G^{+/2} ||_op with L_G the undirected
// Laplacian of the reference graph. H's edges are given as (graph, weights)
// over the same vertex set.
double opnorm_error(const Digraph& ref, std::span<const double> w_ref,
                    const Digraph& test, std::span<const double> w_test);

// Exact pairwise effective resistances of the undirected support.
Eigen::MatrixXd exact_er_matrix(const Digraph& g, std::span<const double> w);

// Projection onto the circulation space of the edge subset `cluster_edges`:
// I - W B (B^T W^2 B)^+ B^T W, indexed by position within cluster_edges.
Eigen::MatrixXd circulation_projector(const Digraph& g, std::span<const double> w,
                                      std::span<const int> cluster_edges);

// P_{H,v} = P_H - u u^T with u = P_H v / ||P_H v||; throws
// DegenerateConstraint when ||P_H v|| <= 1e-12 ||v||.
Eigen::MatrixXd constrained_projector(const Digraph& g, std::span<const double> w,
                                      std::span<const int> cluster_edges,
                                      std::span<const double> v);

// Variance-sum check for a cluster: builds the projected rank-one pieces
// A_e = L^{+/2} (sum_f P_H[f,e] w_f b_f e_{h(f)}^T) L^{+/2} and verifies both
//   sum_e A_e A_e^T  <=  rho * L^{+/2} L_H L^{+/2}
//   sum_e A_e^T A_e  <=  rho * L^{+/2} L_H L^{+/2}
// in the Loewner order. When rho is not supplied it is computed as
// (max cluster weight) * (max exact ER over the cluster's vertex pairs);
// a supplied rho below that product throws PreconditionViolated.
VerificationReport verify_variance_bound(const Digraph& g, std::span<const double> w,
                                         std::span<const int> cluster_edges,
                                         std::optional<double> rho = std::nullopt,
                                         double tol = 1e-8);

// Full sparsifier certification of `test` against `ref` at accuracy eps:
// directed operator-norm error, exact degree preservation, sparsity, and the
// undirected two-sided Loewner sandwich margin.
VerificationReport verify_sparsifier(const Digraph& ref, const Digraph& test,
                                     double eps, double degree_tol = 1e-9);

// |a^T (vL_test - vL_ref) z| measured against eps * ||a||_L ||z||_L.
struct PairErr {
  double abs_err = 0.0;
  double bound = 0.0;
  bool pass = false;
};
PairErr sketch_pair_error(const Digraph& ref, std::span<const double> w_ref,
                          const Digraph& test, std::span<const double> w_test,
                          std::span<const double> a, std::span<const double> z,
                          double eps);

}  // namespace esparse::dense
