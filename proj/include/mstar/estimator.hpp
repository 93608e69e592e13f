#pragma once

#include "mstar/kernels.hpp"

namespace mstar {

struct MstarEstimate {
  double mean = 0.0;
  double std_error = 0.0;      // sample std / sqrt(n_samples)
  long long n_samples = 0;     // samples that entered the mean
  std::uint64_t seed = 0;
  long long n_excluded = 0;    // solver non-convergences, dropped
  bool exclusion_warning = false;  // set when more than 1% were dropped
};

struct ThresholdCurve {
  int dimension_n = 0;
  std::vector<int> sample_counts_m;
  std::vector<double> threshold_khat;   // mean over replicate seeds
  std::vector<double> replicate_std;
};

// Orthonormal basis of the right nullspace of a full-row-rank A (m < n):
// returns n x (n-m) F with A F = 0 and F^T F = I. Throws on rank deficiency,
// reporting the numerical rank.
Mat nullspace_basis(const Mat& A);

// Monte-Carlo mean of min{||x||_inf : F^T x = g} over g ~ N(0, I_q).
// Sample i draws from stream (seed, i); the reduction is an ordered sum, so
// the estimate is bitwise reproducible for any thread count. Non-converged
// samples are excluded and counted.
MstarEstimate estimate_mstar(const Mat& F, long long n_samples, std::uint64_t seed,
                             double tol = 1e-6, int threads = 0);

// ceil(c * log(2/beta) / delta^2 + 1); delta in (0,1], beta in (0,1), c > 0.
long long required_samples(double delta, double beta, double c = 1.0);

// Recovery-threshold proxy of A after a Gaussian perturbation: stacks
// q_extra Gaussian rows onto A, estimates the perturbed nullspace mean width,
// converts it to a spherical mean in the nullspace dimension of A, and
// returns khat = q_extra / ((n - m) * m_spherical^2). The absolute constant
// of the underlying bound is taken as 1, so khat is a relative proxy.
double perturbed_threshold(const Mat& A, int q_extra, long long n_samples, std::uint64_t seed,
                           double tol = 1e-6, int threads = 0);

}  // namespace mstar
