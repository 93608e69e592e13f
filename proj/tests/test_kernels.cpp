#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mstar/kernels.hpp"

using namespace mstar;

namespace {

// independent oracle: largest singular value from the eigendecomposition of M^T M
double brute_force_sigma_max(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(M.transpose() * M);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

Mat random_matrix(int n, int m, std::uint64_t seed) {
  SeededRng rng(seed);
  return gaussian_matrix(rng, n, m);
}

}  // namespace

TEST_CASE("rank1_svd recovers an exact rank-1 factorization") {
  Vec u(3), v(2);
  u << 3, 0, 0;
  v << 0, 1;
  Mat M = u * v.transpose();
  auto r = rank1_svd(M);
  CHECK(r.converged);
  CHECK(r.singular == doctest::Approx(3.0).epsilon(1e-12));
  // joint sign ambiguity
  double s = r.left[0] > 0 ? 1.0 : -1.0;
  CHECK((s * r.left - Vec::Unit(3, 0)).norm() < 1e-10);
  CHECK((s * r.right - Vec::Unit(2, 1)).norm() < 1e-10);
}

TEST_CASE("rank1_svd on the zero matrix") {
  Mat M = Mat::Zero(3, 2);
  auto r = rank1_svd(M);
  CHECK(r.converged);
  CHECK(r.singular == 0.0);
  CHECK(r.left.norm() == doctest::Approx(1.0));
  CHECK(r.right.norm() == doctest::Approx(1.0));
}

TEST_CASE("rank1_svd against the 2x2 eigendecomposition oracle") {
  Mat M = Mat::Zero(2, 2);
  M(0, 0) = 2.0;
  M(1, 1) = 1.0;
  auto r = rank1_svd(M);
  CHECK(r.converged);
  CHECK(r.singular == doctest::Approx(brute_force_sigma_max(M)).epsilon(1e-10));
  CHECK(std::abs(r.left[0]) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(r.right[0]) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("rank1_svd matches brute force on random matrices up to 6x6") {
  for (int n = 1; n <= 6; ++n) {
    for (int m = 1; m <= 6; ++m) {
      Mat M = random_matrix(n, m, 1000 + 10 * n + m);
      auto r = rank1_svd(M, 1e-12, 5000);
      double oracle = brute_force_sigma_max(M);
      CHECK(std::abs(r.singular - oracle) <= 1e-10 * std::max(1.0, M.norm()));
      // residual contract
      CHECK((M * r.right - r.singular * r.left).norm() <= 1e-10 * M.norm());
    }
  }
}

TEST_CASE("spd_solve with identity and scalar matrices") {
  Mat B = random_matrix(3, 2, 7);
  CHECK((spd_solve(Mat::Identity(3, 3), B) - B).norm() < 1e-12);
  Mat H = 2.0 * Mat::Identity(3, 3);
  CHECK((spd_solve(H, Mat::Identity(3, 3)) - 0.5 * Mat::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("spd_solve against the hand-inverted 2x2") {
  Mat H(2, 2);
  H << 2, 1, 1, 2;
  Vec b(2);
  b << 1, 1;
  Vec z = spd_solve(H, b);
  CHECK(z[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("spd_solve recovers a planted solution on well-conditioned systems") {
  for (int trial = 0; trial < 5; ++trial) {
    int p = 8;
    Mat R = random_matrix(p, p, 20 + trial);
    Mat H = R * R.transpose() + static_cast<double>(p) * Mat::Identity(p, p);
    Mat Z0 = random_matrix(p, 3, 40 + trial);
    Mat Z = spd_solve(H, H * Z0);
    CHECK((Z - Z0).norm() <= 1e-8 * Z0.norm());
  }
}

TEST_CASE("spd_solve rescues a singular system with a recorded ridge") {
  // X X^T with fewer columns than rows is singular
  Mat X = random_matrix(6, 2, 99);
  Mat H = X * X.transpose();
  Mat B = random_matrix(6, 1, 77);
  SpdSolveInfo info;
  Mat Z = spd_solve(H, B, &info);
  CHECK(info.ridge > 0.0);
  Mat Hr = H + info.ridge * Mat::Identity(6, 6);
  CHECK((Hr * Z - B).norm() <= 1e-10 * B.norm());
}

TEST_CASE("orthonormalize leaves orthonormal input unchanged") {
  Mat Q0 = random_matrix(5, 3, 11);
  Eigen::HouseholderQR<Mat> qr(Q0);
  Mat Q = qr.householderQ() * Mat::Identity(5, 3);
  CHECK((orthonormalize(Q) - Q).norm() < 1e-12);
}

TEST_CASE("orthonormalize removes column scaling") {
  Mat F = Mat::Zero(4, 1);
  F(0, 0) = 3.0;
  Mat Q = orthonormalize(F);
  CHECK((Q - Mat::Identity(4, 1)).norm() < 1e-12);
}

TEST_CASE("orthonormalize computes the polar factor of orthogonal-times-diagonal") {
  Mat B(3, 2);
  B << 1, 1, 1, -1, 0, 0;
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 5.0;
  Mat Q = orthonormalize(B * D);
  Mat expected = B / std::sqrt(2.0);
  CHECK((Q - expected).norm() < 1e-10);
}

TEST_CASE("orthonormalize is idempotent and rejects rank deficiency") {
  Mat F = random_matrix(6, 3, 13);
  Mat Q1 = orthonormalize(F);
  Mat Q2 = orthonormalize(Q1);
  CHECK((Q2 - Q1).norm() <= 1e-10);
  CHECK((Q1.transpose() * Q1 - Mat::Identity(3, 3)).norm() <= 1e-10);

  Mat bad(4, 2);
  bad.col(0) = Vec::Unit(4, 0);
  bad.col(1) = 2.0 * Vec::Unit(4, 0);
  CHECK_THROWS(orthonormalize(bad));
}

TEST_CASE("gaussian_matrix is reproducible from the seed") {
  SeededRng a(42, 3), b(42, 3);
  Mat A = gaussian_matrix(a, 7, 5);
  Mat B = gaussian_matrix(b, 7, 5);
  CHECK((A - B).norm() == 0.0);
  SeededRng c(43, 3);
  CHECK((A - gaussian_matrix(c, 7, 5)).norm() > 0.0);
}

TEST_CASE("gaussian_matrix has the right first two moments") {
  SeededRng rng(2024);
  Mat M = gaussian_matrix(rng, 1000, 1000);
  double mean = M.mean();
  double var = (M.array() - mean).square().sum() / (M.size() - 1.0);
  CHECK(std::abs(mean) < 0.01);       // 3 sigma ~ 0.003
  CHECK(std::abs(var - 1.0) < 0.01);  // 3 sigma ~ 0.0042
}

TEST_CASE("streams are independent of interleaving") {
  SeededRng s1(5, 100), s2(5, 200);
  std::vector<double> ref1, ref2;
  {
    SeededRng a(5, 100), b(5, 200);
    for (int i = 0; i < 50; ++i) ref1.push_back(a.normal());
    for (int i = 0; i < 50; ++i) ref2.push_back(b.normal());
  }
  // interleaved consumption must reproduce both reference sequences
  std::vector<double> got1, got2;
  for (int i = 0; i < 50; ++i) {
    got1.push_back(s1.normal());
    got2.push_back(s2.normal());
  }
  for (int i = 0; i < 50; ++i) {
    CHECK(got1[i] == ref1[i]);
    CHECK(got2[i] == ref2[i]);
  }
}
