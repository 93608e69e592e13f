#include "mstar/estimator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mstar/minimax.hpp"
#include "mstar/parallel.hpp"

namespace mstar {

Mat nullspace_basis(const Mat& A) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (m >= n) throw std::invalid_argument("nullspace_basis: need strictly more columns than rows");
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-10 * smax) ++rank;
  if (rank < m || smax == 0.0) {
    std::ostringstream msg;
    msg << "nullspace_basis: rank-deficient input (numerical rank " << rank << " of " << m << ")";
    throw std::runtime_error(msg.str());
  }
  return svd.matrixV().rightCols(n - m);
}

MstarEstimate estimate_mstar(const Mat& F, long long n_samples, std::uint64_t seed, double tol,
                             int threads) {
  if (n_samples < 2) throw std::invalid_argument("estimate_mstar: n_samples must be >= 2");
  const int q = static_cast<int>(F.cols());
  std::vector<double> vals(static_cast<size_t>(n_samples), 0.0);
  std::vector<char> ok(static_cast<size_t>(n_samples), 0);

  parallel_for(n_samples, threads, [&](long long i) {
    SeededRng rng(seed, streams::kMstarSampleBase + static_cast<std::uint64_t>(i));
    Vec g(q);
    for (int j = 0; j < q; ++j) g[j] = rng.normal();
    MinimaxSolution sol = solve_linf_lp(F, g, tol);
    vals[static_cast<size_t>(i)] = sol.value;
    ok[static_cast<size_t>(i)] = (sol.status == SolveStatus::converged) ? 1 : 0;
  });

  // ordered reduction: identical result for any worker count
  long long included = 0;
  double sum = 0.0;
  for (long long i = 0; i < n_samples; ++i)
    if (ok[static_cast<size_t>(i)]) {
      sum += vals[static_cast<size_t>(i)];
      ++included;
    }
  if (included < 2) throw std::runtime_error("estimate_mstar: fewer than 2 samples converged");
  const double mean = sum / static_cast<double>(included);
  double ss = 0.0;
  for (long long i = 0; i < n_samples; ++i)
    if (ok[static_cast<size_t>(i)]) {
      double d = vals[static_cast<size_t>(i)] - mean;
      ss += d * d;
    }
  const double sample_std = std::sqrt(ss / static_cast<double>(included - 1));

  MstarEstimate est;
  est.mean = mean;
  est.std_error = sample_std / std::sqrt(static_cast<double>(included));
  est.n_samples = included;
  est.seed = seed;
  est.n_excluded = n_samples - included;
  est.exclusion_warning = est.n_excluded * 100 > n_samples;
  return est;
}

long long required_samples(double delta, double beta, double c) {
  if (!(delta > 0.0) || delta > 1.0 || !(beta > 0.0) || beta >= 1.0 || !(c > 0.0))
    throw std::invalid_argument(
        "required_samples: need delta in (0,1], beta in (0,1), c > 0");
  double v = c * std::log(2.0 / beta) / (delta * delta) + 1.0;
  // nudge guards exact-integer boundaries against roundoff
  return static_cast<long long>(std::ceil(v - 1e-9 * std::max(1.0, std::abs(v))));
}

double perturbed_threshold(const Mat& A, int q_extra, long long n_samples, std::uint64_t seed,
                           double tol, int threads) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (q_extra < 1) throw std::invalid_argument("perturbed_threshold: q_extra must be >= 1");
  if (m + q_extra >= n)
    throw std::invalid_argument("perturbed_threshold: need m + q_extra < n");

  SeededRng rng(seed, streams::kPerturbationMatrix);
  Mat G = gaussian_matrix(rng, q_extra, n);
  Mat stacked(m + q_extra, n);
  stacked.topRows(m) = A;
  stacked.bottomRows(q_extra) = G;

  Mat F = nullspace_basis(stacked);
  MstarEstimate est = estimate_mstar(F, n_samples, seed, tol, threads);

  // spherical conversion in the nullspace dimension of A
  const double d = static_cast<double>(n - m);
  const double m_sph = est.mean * (1.0 / std::sqrt(d) + 1.0 / (4.0 * d * std::sqrt(d)));
  const double scale = std::sqrt(d / static_cast<double>(q_extra)) * m_sph;
  return 1.0 / (scale * scale);
}

}  // namespace mstar
