#include "mstar/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mstar {

namespace {

Vec deterministic_unit(int n, std::uint64_t salt) {
  SeededRng rng(0x72616E6B31ull, salt);  // fixed internal seed, salted by shape
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  double nrm = v.norm();
  if (nrm == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / nrm;
}

}  // namespace

Rank1Factors rank1_svd(const Mat& M, double tol, int max_iter) {
  if (max_iter < 1) throw std::invalid_argument("rank1_svd: max_iter must be >= 1");
  const int n = static_cast<int>(M.rows());
  const int m = static_cast<int>(M.cols());
  const double fro = M.norm();

  Rank1Factors out;
  out.left = Vec::Unit(n, 0);
  out.right = Vec::Unit(m, 0);
  if (fro == 0.0) {
    out.singular = 0.0;
    out.converged = true;
    return out;
  }

  // Iterate on the smaller side so each sweep is two mat-vecs.
  const bool right_side = (m <= n);
  Vec v = deterministic_unit(right_side ? m : n,
                             (static_cast<std::uint64_t>(n) << 32) ^ static_cast<std::uint64_t>(m));

  double sigma = 0.0;
  Vec u;
  int it = 0;
  for (; it < max_iter; ++it) {
    Vec w = right_side ? Vec(M * v) : Vec(M.transpose() * v);
    double wn = w.norm();
    if (wn == 0.0) {
      // start landed in the nullspace; perturb deterministically
      v = deterministic_unit(static_cast<int>(v.size()), 0xABCDull + static_cast<std::uint64_t>(it));
      continue;
    }
    u = w / wn;
    Vec t = right_side ? Vec(M.transpose() * u) : Vec(M * u);
    sigma = t.norm();
    if (sigma == 0.0) {
      v = deterministic_unit(static_cast<int>(v.size()), 0xBCDEull + static_cast<std::uint64_t>(it));
      continue;
    }
    Vec v_new = t / sigma;
    // residuals of the singular pair, both sides
    double r1 = right_side ? (M * v_new - sigma * u).norm() : (M.transpose() * v_new - sigma * u).norm();
    double r2 = (t - sigma * v_new).norm();  // zero by construction, kept for clarity
    v = v_new;
    if (r1 <= tol * fro && r2 <= tol * fro) {
      out.converged = true;
      ++it;
      break;
    }
  }

  if (right_side) {
    out.left = u;
    out.right = v;
  } else {
    out.left = v;
    out.right = u;
  }
  out.singular = sigma;
  out.iterations = it;
  return out;
}

Mat spd_solve(const Mat& H, const Mat& B, SpdSolveInfo* info) {
  if (H.rows() != H.cols()) throw std::invalid_argument("spd_solve: H must be square");
  if (H.rows() != B.rows()) throw std::invalid_argument("spd_solve: dimension mismatch");
  const int p = static_cast<int>(H.rows());
  const double bnorm = B.norm();

  double ridge = 0.0;
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) {
    ridge = 1e-12 * H.trace() / static_cast<double>(p);
    if (ridge <= 0.0) ridge = 1e-300;
    for (int attempt = 0; attempt < 4; ++attempt) {
      llt.compute(H + ridge * Mat::Identity(p, p));
      if (llt.info() == Eigen::Success) break;
      ridge *= 1e3;
    }
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "spd_solve: factorization failed beyond ridge rescue (trace=" << H.trace()
          << ", last ridge=" << ridge << ")";
      throw std::runtime_error(msg.str());
    }
  }

  const Mat Hr = (ridge == 0.0) ? H : Mat(H + ridge * Mat::Identity(p, p));
  Mat Z = llt.solve(B);
  int refinements = 0;
  if (bnorm > 0.0) {
    for (; refinements < 5; ++refinements) {
      Mat R = B - Hr * Z;
      if (R.norm() <= 1e-10 * bnorm) break;
      Z += llt.solve(R);
    }
    double resid = (B - Hr * Z).norm();
    if (resid > 1e-10 * bnorm) {
      // crude condition estimate from the Cholesky diagonal
      Vec d = llt.matrixL().toDenseMatrix().diagonal();
      double cond = (d.minCoeff() > 0) ? std::pow(d.maxCoeff() / d.minCoeff(), 2.0) : INFINITY;
      std::ostringstream msg;
      msg << "spd_solve: residual " << resid / bnorm << " above 1e-10 after refinement"
          << " (condition estimate ~" << cond << ")";
      throw std::runtime_error(msg.str());
    }
  }
  if (info) {
    info->ridge = ridge;
    info->refinements = refinements;
  }
  return Z;
}

Mat orthonormalize(const Mat& F) {
  const int q = static_cast<int>(F.cols());
  if (F.rows() < F.cols()) throw std::invalid_argument("orthonormalize: more columns than rows");
  Mat G = F.transpose() * F;
  Eigen::SelfAdjointEigenSolver<Mat> eig(G);
  if (eig.info() != Eigen::Success) throw std::runtime_error("orthonormalize: eigensolver failed");
  const Vec& lam = eig.eigenvalues();
  double lmax = lam.maxCoeff();
  if (lmax <= 0.0 || lam.minCoeff() <= 1e-24 * lmax) {
    std::ostringstream msg;
    int rank = 0;
    for (int i = 0; i < q; ++i)
      if (lam[i] > 1e-24 * lmax) ++rank;
    msg << "orthonormalize: rank-deficient input (numerical rank " << rank << " of " << q << ")";
    throw std::runtime_error(msg.str());
  }
  Vec inv_sqrt = lam.array().sqrt().inverse().matrix();
  Mat Q = F * (eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose());
  // one Newton-Schulz polish pass tightens orthonormality to ~machine precision
  Q = 0.5 * Q * (3.0 * Mat::Identity(q, q) - Q.transpose() * Q);
  return Q;
}

Mat gaussian_matrix(SeededRng& rng, int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("gaussian_matrix: rows, cols must be >= 1");
  Mat M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = rng.normal();
  return M;
}

}  // namespace mstar
