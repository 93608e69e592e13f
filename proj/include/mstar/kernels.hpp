#pragma once

#include <Eigen/Dense>

#include "mstar/rng.hpp"

namespace mstar {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Dominant singular triple of M: left and right are unit vectors,
// singular >= 0, M ~ singular * left * right^T for rank-1 inputs.
struct Rank1Factors {
  Vec left;
  double singular = 0.0;
  Vec right;
  bool converged = false;
  int iterations = 0;
};

// Power iteration on the Gram matrix with a deterministic pseudo-random
// start. Residual contract: ||M*right - singular*left|| <= tol*||M||_F on
// convergence; a zero matrix yields singular = 0 with arbitrary unit vectors.
Rank1Factors rank1_svd(const Mat& M, double tol = 1e-10, int max_iter = 1000);

struct SpdSolveInfo {
  double ridge = 0.0;    // diagonal shift applied when the factorization fails
  int refinements = 0;   // iterative-refinement passes used
};

// Solves H Z = B for symmetric positive definite H (Cholesky). A singular H
// is rescued with ridge 1e-12*trace(H)/p; beyond rescue an exception carries
// a condition estimate. Residual: ||H Z - B||_F <= 1e-10 ||B||_F (w.r.t. the
// ridged H when a ridge was applied).
Mat spd_solve(const Mat& H, const Mat& B, SpdSolveInfo* info = nullptr);

// Polar factor of F: the orthonormal-column matrix nearest to F in Frobenius
// norm. Throws on rank-deficient input.
Mat orthonormalize(const Mat& F);

// i.i.d. standard normal entries, filled column-major from the stream.
Mat gaussian_matrix(SeededRng& rng, int rows, int cols);

}  // namespace mstar
