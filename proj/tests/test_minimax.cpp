#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mstar/estimator.hpp"
#include "mstar/minimax.hpp"

using namespace mstar;

namespace {

Mat random_orthonormal(int p, int q, std::uint64_t seed) {
  SeededRng rng(seed);
  return orthonormalize(gaussian_matrix(rng, p, q));
}

// brute-force oracle for q <= 2: max g^T y over ||F y||_1 <= 1 on a fine
// angular grid (the feasible set is star-shaped with radius 1/||F u||_1)
double dual_grid_oracle(const Mat& F, const Vec& g, int grid = 200000) {
  if (F.cols() == 1) {
    double denom = F.col(0).lpNorm<1>();
    return std::abs(g[0]) / denom;
  }
  double best = 0.0;
  for (int i = 0; i < grid; ++i) {
    double th = 2.0 * M_PI * i / grid;
    Vec u(2);
    u << std::cos(th), std::sin(th);
    double denom = (F * u).lpNorm<1>();
    if (denom <= 0.0) continue;
    best = std::max(best, g.dot(u) / denom);
  }
  return best;
}

double regularized_objective(const Mat& F, const Vec& g, const Vec& x, const SmoothingParams& sp) {
  Vec r = g - F.transpose() * x;
  return x.lpNorm<Eigen::Infinity>() + 0.5 * sp.lambda_s * x.squaredNorm() +
         0.5 * sp.sigma_s * r.squaredNorm();
}

}  // namespace

TEST_CASE("l1 ball projection basics") {
  Vec v(3);
  v << 0.2, -0.1, 0.3;
  CHECK((project_l1_ball(v) - v).norm() == 0.0);  // already inside
  Vec w(2);
  w << 3.0, 1.0;
  Vec pw = project_l1_ball(w);
  CHECK(pw.lpNorm<1>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pw[0] == doctest::Approx(1.0));
  CHECK(pw[1] == doctest::Approx(0.0));
}

TEST_CASE("solve_linf_lp: single active coordinate") {
  Mat F = Mat::Zero(4, 1);
  F(0, 0) = 1.0;
  Vec g(1);
  g << 2.0;
  auto sol = solve_linf_lp(F, g);
  CHECK(sol.status == SolveStatus::converged);
  CHECK(sol.value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sol.x_star[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sol.x_star.tail(3).norm() < 1e-8);
}

TEST_CASE("solve_linf_lp: mass spreads over the constrained coordinates") {
  Mat F = Mat::Zero(4, 1);
  F(0, 0) = F(1, 0) = 1.0 / std::sqrt(2.0);
  Vec g(1);
  g << 1.0;
  auto sol = solve_linf_lp(F, g);
  CHECK(sol.value == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-8));
  CHECK(sol.x_star[0] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-6));
  CHECK(sol.x_star[1] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-6));
  CHECK(std::abs(sol.x_star[2]) < 1e-7);
  CHECK(std::abs(sol.x_star[3]) < 1e-7);
}

TEST_CASE("solve_linf_lp: fully determined system") {
  Mat F = Mat::Identity(3, 3);
  Vec g(3);
  g << 1.0, -2.0, 0.5;
  auto sol = solve_linf_lp(F, g);
  CHECK((sol.x_star - g).norm() < 1e-8);
  CHECK(sol.value == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("solve_linf_lp: zero right-hand side and orthonormality precondition") {
  Mat F = random_orthonormal(5, 2, 31);
  auto sol = solve_linf_lp(F, Vec::Zero(2));
  CHECK(sol.value == 0.0);
  CHECK(sol.x_star.norm() == 0.0);

  Mat bad = 2.0 * F;
  CHECK_THROWS(solve_linf_lp(bad, Vec::Ones(2)));
}

TEST_CASE("solve_linf_lp: feasibility, certificate and scale covariance") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Mat F = random_orthonormal(12, 5, seed);
    SeededRng rng(seed, 9);
    Vec g(5);
    for (int i = 0; i < 5; ++i) g[i] = rng.normal();
    auto sol = solve_linf_lp(F, g);
    CHECK(sol.status == SolveStatus::converged);
    CHECK((F.transpose() * sol.x_star - g).norm() <= 1e-8 * std::max(1.0, g.norm()));
    CHECK(sol.value >= sol.lower_bound - 1e-12);
    CHECK(sol.value - sol.lower_bound <= 1e-8 * std::max(1.0, sol.value));
    // scale covariance
    for (double c : {3.0, -0.5}) {
      auto scaled = solve_linf_lp(F, Vec(c * g));
      CHECK(std::abs(scaled.value - std::abs(c) * sol.value) <= 1e-8 * std::max(1.0, sol.value));
    }
  }
}

TEST_CASE("solve_linf_lp: duality against the q<=2 grid oracle") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Mat F = random_orthonormal(6, 2, seed);
    SeededRng rng(seed, 5);
    Vec g(2);
    g << rng.normal(), rng.normal();
    auto sol = solve_linf_lp(F, g);
    double oracle = dual_grid_oracle(F, g);
    // grid resolution limits the oracle accuracy
    CHECK(std::abs(sol.value - oracle) <= 2e-4 * std::max(1.0, oracle));
  }
  Mat F1 = random_orthonormal(5, 1, 17);
  Vec g1(1);
  g1 << 1.3;
  auto sol1 = solve_linf_lp(F1, g1);
  CHECK(sol1.value == doctest::Approx(dual_grid_oracle(F1, g1)).epsilon(1e-9));
}

TEST_CASE("solve_regularized: origin is optimal for g = 0") {
  Mat F = random_orthonormal(6, 3, 21);
  SmoothingParams sp;
  auto sol = solve_regularized(F, Vec::Zero(3), sp);
  CHECK(sol.x_star.norm() <= 1e-10);
  CHECK(sol.r_star.norm() <= 1e-10);
  CHECK(sol.value <= 1e-12);
}

TEST_CASE("solve_regularized: 1-D calculus example") {
  Mat F = Mat::Zero(2, 1);
  F(0, 0) = 1.0;
  Vec g(1);
  g << 1.0;
  SmoothingParams sp{1.0, 1.0};
  auto sol = solve_regularized(F, g, sp, 1e-12);
  CHECK(sol.status == SolveStatus::converged);
  CHECK(sol.x_star.norm() <= 1e-10);
  CHECK(sol.r_star[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.y_star[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.value == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("solve_regularized: constraint residual and dual feasibility") {
  for (std::uint64_t seed : {41u, 42u}) {
    Mat F = random_orthonormal(10, 4, seed);
    SeededRng rng(seed, 3);
    Vec g(4);
    for (int i = 0; i < 4; ++i) g[i] = rng.normal();
    SmoothingParams sp;  // defaults 1e-4 / 1e4
    auto sol = solve_regularized(F, g, sp);
    CHECK(sol.status == SolveStatus::converged);
    CHECK((F.transpose() * sol.x_star + sol.r_star - g).norm() <= 1e-8);
    // dual feasibility: F y - lambda x must lie in the l-inf subdifferential,
    // i.e. inside the l1 ball, and on the face when x != 0
    Vec w = F * sol.y_star - sp.lambda_s * sol.x_star;
    CHECK(w.lpNorm<1>() <= 1.0 + 1e-6);
    if (sol.x_star.lpNorm<Eigen::Infinity>() > 1e-9) CHECK(w.lpNorm<1>() >= 1.0 - 1e-6);
  }
}

TEST_CASE("solve_regularized dominates the LP solution in its own objective") {
  Mat F = random_orthonormal(9, 4, 55);
  SeededRng rng(55, 4);
  Vec g(4);
  for (int i = 0; i < 4; ++i) g[i] = rng.normal();
  SmoothingParams sp;
  auto reg = solve_regularized(F, g, sp, 1e-11);
  auto lp = solve_linf_lp(F, g);
  CHECK(regularized_objective(F, g, reg.x_star, sp) <=
        regularized_objective(F, g, lp.x_star, sp) + 1e-10);
}

TEST_CASE("LP sandwich: regularized value upper-bounds the LP value, shrinking along the schedule") {
  Mat F = random_orthonormal(10, 4, 77);
  SeededRng rng(77, 2);
  Vec g(4);
  for (int i = 0; i < 4; ++i) g[i] = rng.normal();
  auto lp = solve_linf_lp(F, g);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (double lam : {1e-2, 1e-4, 1e-6}) {
    SmoothingParams sp{lam, 1.0 / lam};
    auto reg = solve_regularized(F, g, sp, 1e-12);
    CHECK(reg.value >= lp.value - 1e-9);
    double gap = reg.value - lp.value;
    CHECK(gap <= prev_gap + 1e-12);  // monotone trend along the schedule
    prev_gap = gap;
  }
  CHECK(prev_gap <= 1e-3);
}

TEST_CASE("gradient_nu: zero at g = 0 and at an inactive primal") {
  Mat F = random_orthonormal(7, 3, 91);
  SmoothingParams sp;
  CHECK(gradient_nu(F, Vec::Zero(3), sp).norm() <= 1e-12);

  Mat F2 = Mat::Zero(2, 1);
  F2(0, 0) = 1.0;
  Vec g2(1);
  g2 << 1.0;
  SmoothingParams unit{1.0, 1.0};
  CHECK(gradient_nu(F2, g2, unit).norm() <= 1e-10);
}

TEST_CASE("gradient_nu matches central finite differences") {
  // the finite-difference oracle evaluates nu_g at F +- h E_ij
  SmoothingParams sp;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Mat F = random_orthonormal(6, 2, 300 + seed);
    SeededRng rng(seed, 8);
    Vec g(2);
    g << rng.normal(), rng.normal();
    Mat grad = gradient_nu(F, g, sp, 1e-12);
    Mat fd(6, 2);
    const double h = 1e-5;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 2; ++j) {
        Mat Fp = F, Fm = F;
        Fp(i, j) += h;
        Fm(i, j) -= h;
        double vp = solve_regularized(Fp, g, sp, 1e-12).value;
        double vm = solve_regularized(Fm, g, sp, 1e-12).value;
        fd(i, j) = (vp - vm) / (2.0 * h);
      }
    }
    CHECK((grad - fd).norm() <= 1e-4 * std::max(1.0, fd.norm()));
  }
}
