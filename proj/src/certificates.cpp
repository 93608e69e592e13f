#include "mstar/certificates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mstar/estimator.hpp"

namespace mstar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat psd_project(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (S + S.transpose()));
  Vec lam = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

// entrywise l1-ball projection of a matrix
Mat l1_ball_project(const Mat& M, double radius) {
  Eigen::Map<const Vec> v(M.data(), M.size());
  Vec pv = project_l1_ball(v, radius);
  return Eigen::Map<const Mat>(pv.data(), M.rows(), M.cols());
}

double min_eig(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (S + S.transpose()),
                                         Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

double alpha1(const Mat& A) {
  Mat F = nullspace_basis(A);
  const int n = static_cast<int>(F.rows());
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec g = F.row(i).transpose();
    if (g.norm() == 0.0) continue;  // coordinate vanishes on the nullspace
    // max{x_i : A x = 0, ||x||_1 <= 1} equals the dual value of the
    // l-inf projection problem at g = row_i(F); sign symmetry covers -x_i
    MinimaxSolution sol = solve_linf_lp(F, g, 1e-10);
    best = std::max(best, sol.value);
  }
  return best;
}

BoundBracket sdp_radius(const Mat& A, double tol, int max_iter) {
  Mat F = nullspace_basis(A);
  const int n = static_cast<int>(F.rows());
  const int d = static_cast<int>(F.cols());

  Mat X = Mat::Zero(n, n);
  Mat U = Mat::Zero(n, n);
  Mat Y = Mat::Zero(d, d);
  Mat FYF = Mat::Zero(n, n);
  double rho = 1.0;

  BoundBracket out;
  out.lower = 0.0;
  out.upper = kInf;
  bool certified = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    X = l1_ball_project(FYF - U, 1.0);
    Mat M = F.transpose() * (X + U) * F;
    M.diagonal().array() += 1.0 / rho;
    Y = psd_project(M);
    Mat FYF_new = F * Y * F.transpose();
    double dual_res = rho * (FYF_new - FYF).norm();
    FYF = FYF_new;
    U += X - FYF;
    double primal_res = (X - FYF).norm();

    if (it % 25 == 24) {
      // feasible rounding: F Y F^T is psd and annihilated by A; rescale into the ball
      double s = FYF.lpNorm<1>();
      double lb = (s > 1.0) ? Y.trace() / s : Y.trace();
      if (lb > out.lower) out.lower = lb;
      // dual certificate: any symmetric L with F^T L F >= I gives max|L| as a bound
      Mat L = rho * 0.5 * (U + U.transpose());
      for (double sign : {1.0, -1.0}) {
        double e = min_eig(sign * (F.transpose() * L * F));
        if (e > 1e-12) {
          double ub = (sign * L).cwiseAbs().maxCoeff() / e;
          if (ub < out.upper) out.upper = ub;
        }
      }
      if (out.upper - out.lower <= tol * std::max(1.0, std::abs(out.lower))) {
        certified = true;
        ++it;
        break;
      }
      // residual balancing
      if (primal_res > 10.0 * dual_res && rho < 1e6) {
        rho *= 2.0;
        U *= 0.5;
      } else if (dual_res > 10.0 * primal_res && rho > 1e-6) {
        rho *= 0.5;
        U *= 2.0;
      }
    }
  }
  out.value = out.lower;
  out.status = certified ? SolveStatus::converged : SolveStatus::max_iter;
  out.iterations = it;
  return out;
}

BoundBracket lp_radius(const Mat& A, double tol, int max_iter) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  if (m >= n) throw std::invalid_argument("lp_radius: need strictly more columns than rows");
  // projector onto the nullspace of A, applied columnwise
  Eigen::LLT<Mat> gram(A * A.transpose());
  if (gram.info() != Eigen::Success)
    throw std::runtime_error("lp_radius: rank-deficient A");
  Mat N = Mat::Identity(n, n) - A.transpose() * gram.solve(A);

  const double t = 0.5 / static_cast<double>(n);  // splitting step
  Mat W = Mat::Zero(n, n);
  Mat I = Mat::Identity(n, n);

  BoundBracket out;
  out.lower = 0.0;
  out.upper = kInf;
  bool certified = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    Mat Xf = N * (W + t * I);
    Mat Xg = l1_ball_project(2.0 * Xf - W, 1.0);
    W += Xg - Xf;

    if (it % 50 == 49) {
      Mat Xr = N * Xg;
      double s = Xr.lpNorm<1>();
      double lb = (s > 1.0) ? Xr.trace() / s : Xr.trace();
      if (lb > out.lower) out.lower = lb;
      // I - (Xf - W)/t lies in the row space of A, so (Xf - W)/t certifies
      double ub = ((Xf - W) / t).cwiseAbs().maxCoeff();
      if (ub < out.upper) out.upper = ub;
      if (out.upper - out.lower <= tol * std::max(1.0, std::abs(out.lower))) {
        certified = true;
        ++it;
        break;
      }
    }
  }
  out.value = out.lower;
  out.status = certified ? SolveStatus::converged : SolveStatus::max_iter;
  out.iterations = it;
  return out;
}

namespace {

// max Tr(X C) s.t. diag(X) = 1, X psd, for psd C; bracketed by a scaled
// feasible rounding and the diagonal dual.
BoundBracket maxcut_sdp(const Mat& C, double tol, int max_iter) {
  const int n = static_cast<int>(C.rows());
  Mat Z = Mat::Identity(n, n);
  Mat U = Mat::Zero(n, n);
  double rho = std::max(1.0, C.trace() / n);

  BoundBracket out;
  out.lower = -kInf;
  out.upper = kInf;
  bool certified = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    Mat X = psd_project(Z - U + C / rho);
    Mat Z_new = X + U;
    Z_new.diagonal().setOnes();
    double dual_res = rho * (Z_new - Z).norm();
    Z = Z_new;
    U += X - Z;
    double primal_res = (X - Z).norm();

    if (it % 25 == 24) {
      // rescale the psd iterate to unit diagonal
      Vec dg = X.diagonal();
      if (dg.minCoeff() > 1e-12) {
        Vec inv_sqrt = dg.array().sqrt().inverse().matrix();
        Mat Xf = inv_sqrt.asDiagonal() * X * inv_sqrt.asDiagonal();
        double lb = (C * Xf).trace();
        if (lb > out.lower) out.lower = lb;
        // dual candidate nu_i = (C Xf)_ii, eigen-shifted to feasibility
        Vec nu = (C * Xf).diagonal();
        Mat S = Mat(nu.asDiagonal()) - C;
        double e = min_eig(S);
        double ub = nu.sum() - static_cast<double>(n) * std::min(e, 0.0);
        if (ub < out.upper) out.upper = ub;
      }
      if (out.upper - out.lower <= tol * std::max(1.0, std::abs(out.lower))) {
        certified = true;
        ++it;
        break;
      }
      if (primal_res > 10.0 * dual_res && rho < 1e8) {
        rho *= 2.0;
        U *= 0.5;
      } else if (dual_res > 10.0 * primal_res && rho > 1e-8) {
        rho *= 0.5;
        U *= 2.0;
      }
    }
  }
  out.value = out.lower;
  out.status = certified ? SolveStatus::converged : SolveStatus::max_iter;
  out.iterations = it;
  return out;
}

}  // namespace

BkBounds bK_maxcut(const Mat& F, double tol, int max_iter) {
  if (F.norm() == 0.0) throw std::invalid_argument("bK_maxcut: F must be nonzero");
  Mat C = F * F.transpose();
  BoundBracket sdp = maxcut_sdp(C, tol, max_iter);
  BkBounds out;
  out.sdp_value = sdp.value;
  out.upper = std::sqrt(std::max(0.0, sdp.value));
  out.lower = std::sqrt(std::max(0.0, 2.0 / M_PI * sdp.value));
  out.status = sdp.status;
  return out;
}

double mK_closed_form(const Mat& F) {
  const int q = static_cast<int>(F.cols());
  const double dq = static_cast<double>(q);
  double row_sum = 0.0;
  for (int i = 0; i < F.rows(); ++i) row_sum += F.row(i).norm();
  const double gaussian_mean = std::sqrt(2.0 / M_PI) * row_sum;
  return gaussian_mean * (1.0 / std::sqrt(dq) + 1.0 / (4.0 * dq * std::sqrt(dq)));
}

GeometryReport dvoretzky_ratio(const Mat& F, double tol) {
  BkBounds bk = bK_maxcut(F, tol);
  GeometryReport out;
  out.b_upper = bk.upper;
  out.b_lower = bk.lower;
  out.m_of_k = mK_closed_form(F);
  const double q = static_cast<double>(F.cols());
  out.dvoretzky_ratio =
      (bk.upper > 0.0) ? q * (out.m_of_k / bk.upper) * (out.m_of_k / bk.upper) : 0.0;
  out.status = bk.status;
  return out;
}

CertificateReport certify(const Mat& A, double tol) {
  CertificateReport rep;
  rep.solver_tol = tol;
  rep.alpha1 = alpha1(A);
  rep.sdp = sdp_radius(A, tol);
  rep.lp = lp_radius(A, std::min(tol, 1e-8));
  if (rep.sdp.value > 0.0) {
    rep.certified_cardinality = 1.0 / (4.0 * rep.sdp.value);
    rep.approx_cardinality = 1.0 / (16.0 * rep.sdp.value);
  }
  return rep;
}

}  // namespace mstar
