#pragma once

#include <vector>

#include "mstar/kernels.hpp"

namespace mstar {

struct OmpResult {
  std::vector<int> support;
  Vec coeffs;               // least-squares fit on the support, same order
  double residual_norm = 0.0;
};

// Orthogonal Matching Pursuit: at each of S steps select the atom with the
// largest |<d_i, residual>| / ||d_i||, refit by least squares on the
// accumulated support (incremental QR), update the residual. Stops early when
// the residual drops below 1e-12 ||y||. Ties break to the lowest atom index.
OmpResult omp(const Mat& D, const Vec& y, int S);

// Masked form: identical to omp(diag(b) D, b ⊙ y, S) with b in {0,1}^n,
// without materializing the masked dictionary. Atoms with zero norm on the
// observed rows are excluded from selection.
OmpResult omp_masked(const Mat& D, const Vec& y, const Vec& mask, int S);

struct SparseCode {
  Mat coefficients;                        // p x m, zero off-support
  std::vector<std::vector<int>> supports;  // per column
  int sparsity_target = 0;
};

SparseCode encode_all(const Mat& D, const Mat& Y, int S, int threads = 0);
SparseCode encode_all_masked(const Mat& D, const Mat& Y, const Mat& B, int S, int threads = 0);

}  // namespace mstar
