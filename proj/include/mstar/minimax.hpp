#pragma once

#include "mstar/kernels.hpp"

namespace mstar {

enum class SolveStatus { converged, max_iter };

// Smoothing parameters of the regularized l-inf projection problem:
//   minimize ||x||_inf + (lambda_s/2)||x||_2^2 + (sigma_s/2)||r||_2^2
//   subject to F^T x + r = g.
// Named lambda_s / sigma_s to avoid collision with the training penalty
// weight; both must be strictly positive.
struct SmoothingParams {
  double lambda_s = 1e-4;
  double sigma_s = 1e4;
};

struct MinimaxSolution {
  Vec x_star;               // primal, length p
  Vec r_star;               // constraint slack, length q (zero for the LP path)
  Vec y_star;               // multiplier of F^T x + r = g, length q
  double value = 0.0;       // objective at the solution
  double lower_bound = 0.0; // certified dual bound (LP path)
  SolveStatus status = SolveStatus::converged;
  int iterations = 0;
};

// Regularized problem above, solved through its smooth strongly concave dual
//   D(y) = y^T g - dist^2(F y, B1)/(2 lambda_s) - ||y||^2/(2 sigma_s),
// where B1 is the unit l1 ball. Each dual evaluation is one proximal step on
// ||x||_inf + (lambda_s/2)||x||_2^2 (an l1-ball projection); the multiplier y
// is advanced by a semismooth Newton step with a gradient-ascent fallback.
// F need not have orthonormal columns. Unique optimum by strong convexity.
MinimaxSolution solve_regularized(const Mat& F, const Vec& g, const SmoothingParams& params,
                                  double tol = 1e-8, int max_iter = 5000,
                                  const Vec* warm_start_y = nullptr);

// Exact problem  min ||x||_inf  s.t. F^T x = g  for orthonormal-column F,
// solved by the regularized path on the decreasing schedule
// lambda_s = 1/sigma_s in {1e-2, 1e-4, 1e-6, ...} with warm starts, until the
// certified primal/dual bracket closes below tol. x_star is feasible, value
// is the feasible objective ||x_star||_inf, lower_bound the dual certificate.
MinimaxSolution solve_linf_lp(const Mat& F, const Vec& g, double tol = 1e-8);

// Gradient of the regularized value nu_g(F) with respect to F:
// -x_star y_star^T from the solution of solve_regularized.
Mat gradient_nu(const Mat& F, const Vec& g, const SmoothingParams& params, double tol = 1e-8);

// Euclidean projection onto the l1 ball of the given radius, O(p log p).
Vec project_l1_ball(const Vec& v, double radius = 1.0);

}  // namespace mstar
