#pragma once

#include "mstar/minimax.hpp"

namespace mstar {

struct BoundBracket {
  double value = 0.0;   // certified feasible value (lower side of the bracket)
  double lower = 0.0;
  double upper = 0.0;
  SolveStatus status = SolveStatus::converged;
  int iterations = 0;
};

// alpha_1(A) = max over nullspace of ||x||_inf / ||x||_1, computed exactly as
// n per-coordinate linear programs (sign symmetry halves the 2n).
double alpha1(const Mat& A);

// Semidefinite bound on the squared section radius:
//   max Tr X  s.t.  Tr(A^T A X) = 0, ||X||_1 <= 1 (entrywise), X psd.
// Solved by operator splitting with projections onto the psd cone and the
// entrywise l1 ball; a rounded feasible point and a scaled dual certificate
// bracket the optimum. Desk-scale instances (n <= 100).
BoundBracket sdp_radius(const Mat& A, double tol = 1e-6, int max_iter = 50000);

// Linear-programming analogue (psd constraint dropped, X not symmetric):
//   max Tr X  s.t.  A X = 0, ||X||_1 <= 1.
BoundBracket lp_radius(const Mat& A, double tol = 1e-8, int max_iter = 200000);

// MAXCUT-type bound on b(K) = max{||Fx||_1 : ||x||_2 <= 1}:
//   SDP(F) = max Tr(X F F^T)  s.t.  diag(X) = 1, X psd,
// giving sqrt(2/pi * SDP) <= b(K) <= sqrt(SDP).
struct BkBounds {
  double lower = 0.0;
  double upper = 0.0;
  double sdp_value = 0.0;
  SolveStatus status = SolveStatus::converged;
};
BkBounds bK_maxcut(const Mat& F, double tol = 1e-6, int max_iter = 50000);

// Gaussian mean E||Fg||_1 = sqrt(2/pi) * sum_i ||row_i(F)||_2 times the
// spherical conversion (1/sqrt(q) + 1/(4 q^{3/2})) in the domain dimension q.
double mK_closed_form(const Mat& F);

struct GeometryReport {
  double b_upper = 0.0;
  double b_lower = 0.0;
  double m_of_k = 0.0;
  double dvoretzky_ratio = 0.0;   // q * (m_of_k / b_upper)^2, constant not applied
  SolveStatus status = SolveStatus::converged;
};
GeometryReport dvoretzky_ratio(const Mat& F, double tol = 1e-6);

struct CertificateReport {
  double alpha1 = 0.0;
  BoundBracket sdp;
  BoundBracket lp;
  double certified_cardinality = 0.0;  // 1/(4 sdp) — exact-recovery cardinality
  double approx_cardinality = 0.0;     // 1/(16 sdp) — approximation-factor cardinality
  double solver_tol = 0.0;
};
CertificateReport certify(const Mat& A, double tol = 1e-6);

}  // namespace mstar
