#include "mstar/sparse_coding.hpp"

#include <cmath>
#include <stdexcept>

#include "mstar/parallel.hpp"

namespace mstar {

namespace {

// Greedy pursuit over the columns of D, optionally restricted to the rows
// where mask is nonzero. Atoms with zero norm on the kept rows are excluded.
OmpResult omp_impl(const Mat& D, const Vec& y, const Vec* mask, int S) {
  const int n = static_cast<int>(D.rows());
  const int p = static_cast<int>(D.cols());
  if (S < 1 || S > std::min(n, p))
    throw std::invalid_argument("omp: S must be in [1, min(n, p)]");

  Vec ym = y;
  Mat Dm;
  const Mat* Duse = &D;
  if (mask) {
    if (mask->size() != n) throw std::invalid_argument("omp: mask length mismatch");
    Dm = mask->asDiagonal() * D;
    ym = mask->cwiseProduct(y);
    Duse = &Dm;
  }

  Vec norms(p);
  for (int j = 0; j < p; ++j) {
    norms[j] = Duse->col(j).norm();
    if (!mask && norms[j] == 0.0)
      throw std::invalid_argument("omp: dictionary has a zero atom");
  }

  OmpResult out;
  const double y_norm = ym.norm();
  out.residual_norm = y_norm;
  out.coeffs = Vec();
  if (y_norm == 0.0) return out;

  Mat Q(n, S);
  Mat R = Mat::Zero(S, S);
  Vec qty = Vec::Zero(S);
  Vec resid = ym;
  std::vector<char> used(static_cast<size_t>(p), 0);

  int k = 0;
  for (; k < S; ++k) {
    int pick = -1;
    double best = 0.0;
    for (int j = 0; j < p; ++j) {
      if (used[static_cast<size_t>(j)] || norms[j] == 0.0) continue;
      double c = std::abs(Duse->col(j).dot(resid)) / norms[j];
      if (c > best) {
        best = c;
        pick = j;
      }
    }
    if (pick < 0) break;
    used[static_cast<size_t>(pick)] = 1;

    // incremental QR with one reorthogonalization pass
    Vec a = Duse->col(pick);
    Vec r_new(k);
    Vec v = a;
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < k; ++i) {
        double c = Q.col(i).dot(v);
        if (pass == 0)
          r_new[i] = c;
        else
          r_new[i] += c;
        v -= c * Q.col(i);
      }
    }
    double rkk = v.norm();
    if (rkk <= 1e-12 * a.norm()) {
      // atom already spanned by the selection; nothing left to gain
      used[static_cast<size_t>(pick)] = 1;
      break;
    }
    out.support.push_back(pick);
    Q.col(k) = v / rkk;
    for (int i = 0; i < k; ++i) R(i, k) = r_new[i];
    R(k, k) = rkk;
    qty[k] = Q.col(k).dot(ym);
    resid -= qty[k] * Q.col(k);
    out.residual_norm = resid.norm();
    if (out.residual_norm <= 1e-12 * y_norm) {
      ++k;
      break;
    }
  }

  const int s = static_cast<int>(out.support.size());
  if (s > 0) {
    out.coeffs =
        R.topLeftCorner(s, s).triangularView<Eigen::Upper>().solve(qty.head(s));
  }
  return out;
}

}  // namespace

OmpResult omp(const Mat& D, const Vec& y, int S) { return omp_impl(D, y, nullptr, S); }

OmpResult omp_masked(const Mat& D, const Vec& y, const Vec& mask, int S) {
  return omp_impl(D, y, &mask, S);
}

SparseCode encode_all(const Mat& D, const Mat& Y, int S, int threads) {
  const int p = static_cast<int>(D.cols());
  const int m = static_cast<int>(Y.cols());
  SparseCode code;
  code.coefficients = Mat::Zero(p, m);
  code.supports.resize(static_cast<size_t>(m));
  code.sparsity_target = S;
  parallel_for(m, threads, [&](long long j) {
    OmpResult r = omp(D, Y.col(j), S);
    code.supports[static_cast<size_t>(j)] = r.support;
    for (size_t k = 0; k < r.support.size(); ++k)
      code.coefficients(r.support[k], j) = r.coeffs[static_cast<Eigen::Index>(k)];
  });
  return code;
}

SparseCode encode_all_masked(const Mat& D, const Mat& Y, const Mat& B, int S, int threads) {
  if (B.rows() != Y.rows() || B.cols() != Y.cols())
    throw std::invalid_argument("encode_all_masked: mask shape must match Y");
  const int p = static_cast<int>(D.cols());
  const int m = static_cast<int>(Y.cols());
  SparseCode code;
  code.coefficients = Mat::Zero(p, m);
  code.supports.resize(static_cast<size_t>(m));
  code.sparsity_target = S;
  parallel_for(m, threads, [&](long long j) {
    Vec b = B.col(j);
    if (b.maxCoeff() <= 0.0) return;  // nothing observed: code stays zero
    OmpResult r = omp_masked(D, Y.col(j), b, S);
    code.supports[static_cast<size_t>(j)] = r.support;
    for (size_t k = 0; k < r.support.size(); ++k)
      code.coefficients(r.support[k], j) = r.coeffs[static_cast<Eigen::Index>(k)];
  });
  return code;
}

}  // namespace mstar
