#include "mstar/inpainting.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mstar/estimator.hpp"
#include "mstar/parallel.hpp"

namespace mstar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (salt + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  return z ^ (z >> 31);
}

void fix_sign(Vec& u, Vec& v) {
  for (int i = 0; i < u.size(); ++i) {
    if (u[i] != 0.0) {
      if (u[i] < 0.0) {
        u = -u;
        v = -v;
      }
      return;
    }
  }
}

}  // namespace

double mask_coverage(const Mat& B) {
  if (B.size() == 0) return 0.0;
  return B.sum() / static_cast<double>(B.size());
}

void validate_mask(const Mat& B, const Mat& Y) {
  if (B.rows() != Y.rows() || B.cols() != Y.cols())
    throw std::invalid_argument("mask shape must match the patch matrix");
  for (int j = 0; j < B.cols(); ++j)
    for (int i = 0; i < B.rows(); ++i) {
      double v = B(i, j);
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("mask entries must be 0 or 1");
    }
}

TrainResult wksvd(const Dictionary& D0, const Mat& Y, const Mat& B, int S, int niter, int n_dico,
                  const WksvdOptions& opts) {
  auto t0 = Clock::now();
  if (D0.admissible_set != AdmissibleSet::unit_columns)
    throw std::invalid_argument("wksvd: D0 must be in the unit-columns set");
  D0.validate();
  validate_mask(B, Y);
  if (n_dico < 1) throw std::invalid_argument("wksvd: n_dico must be >= 1");
  const int n = D0.n();
  const int p = D0.p();
  const int m = static_cast<int>(Y.cols());

  // only observed data enters any computation
  const Mat Ym = B.cwiseProduct(Y);

  TrainResult res;
  res.dict = D0;
  Mat& D = res.dict.atoms;
  TrainTrace& trace = res.trace;
  const int last_trainable = D0.has_constant_atom ? p - 1 : p;

  for (int iter = 0; iter < niter; ++iter) {
    res.code = encode_all_masked(D, Y, B, S, opts.threads);
    Mat& X = res.code.coefficients;
    // masked residual, maintained across column updates
    Mat R = Ym - B.cwiseProduct(D * X);

    for (int l = 0; l < last_trainable; ++l) {
      std::vector<int> omega;
      for (int j = 0; j < m; ++j)
        if (X(l, j) != 0.0) omega.push_back(j);
      if (omega.empty()) {
        if (opts.reseed_unused_atoms) {
          int worst = 0;
          double worst_norm = -1.0;
          for (int j = 0; j < m; ++j) {
            double en = R.col(j).norm();
            if (en > worst_norm) {
              worst_norm = en;
              worst = j;
            }
          }
          double nn = Ym.col(worst).norm();
          if (nn > 0.0) {
            D.col(l) = Ym.col(worst) / nn;
            trace.warnings.push_back("reseeded unused atom " + std::to_string(l));
          }
        }
        continue;
      }
      const int no = static_cast<int>(omega.size());
      // observed part of E = Y - sum_{i != l} d_i X^(i), restricted to omega
      Mat E_obs(n, no);
      Mat Bo(n, no);
      Vec x_row(no);
      for (int k = 0; k < no; ++k) {
        int j = omega[static_cast<size_t>(k)];
        x_row[k] = X(l, j);
        Bo.col(k) = B.col(j);
        E_obs.col(k) = R.col(j) + B.col(j).cwiseProduct(D.col(l) * x_row[k]);
      }

      Vec d = D.col(l);
      double prev_obj = (E_obs - Bo.cwiseProduct(d * x_row.transpose())).squaredNorm();
      bool updated = true;
      for (int inner = 0; inner < n_dico; ++inner) {
        // fill the unobserved entries with the current rank-one estimate
        Mat E_B = E_obs + (Mat::Ones(n, no) - Bo).cwiseProduct(d * x_row.transpose());
        Rank1Factors r1 = rank1_svd(E_B);
        if (!r1.converged) {
          trace.warnings.push_back("rank1_svd did not converge on atom " + std::to_string(l));
          updated = (inner > 0);
          break;
        }
        Vec u = r1.left, v = r1.right;
        fix_sign(u, v);
        d = u;
        x_row = r1.singular * v;
        double obj = (E_obs - Bo.cwiseProduct(d * x_row.transpose())).squaredNorm();
        if (prev_obj > 0.0) {
          double inc = (obj - prev_obj) / prev_obj;
          if (inc > trace.max_inner_loss_increase) trace.max_inner_loss_increase = inc;
        }
        prev_obj = obj;
      }
      if (!updated) continue;

      D.col(l) = d;
      for (int k = 0; k < no; ++k) {
        int j = omega[static_cast<size_t>(k)];
        X(l, j) = x_row[k];
        R.col(j) = E_obs.col(k) - B.col(j).cwiseProduct(d * x_row[k]);
      }
    }

    trace.loss.push_back(R.squaredNorm());
  }

  trace.wall_time_sec = seconds_since(t0);
  return res;
}

TrainResult train_penalized_inpaint(const Dictionary& D0, const Mat& F0, const Mat& Y,
                                    const Mat& B, const TrainConfig& cfg, int n_dico,
                                    const SmoothingParams& params) {
  auto t0 = Clock::now();
  if (D0.admissible_set != AdmissibleSet::max_norm_one)
    throw std::invalid_argument("train_penalized_inpaint: D0 must be in the max-norm-one set");
  D0.validate();
  validate_mask(B, Y);
  if (n_dico < 1) throw std::invalid_argument("train_penalized_inpaint: n_dico must be >= 1");
  const int n = D0.n();
  const int p = D0.p();
  if (F0.rows() != p || F0.cols() != p - n)
    throw std::invalid_argument("train_penalized_inpaint: F0 must be p x (p - n)");
  if ((D0.atoms * F0).norm() > 1e-6 * std::max(1.0, D0.atoms.norm()))
    throw std::invalid_argument("train_penalized_inpaint: F0 must annihilate D0");

  const Mat Ym = B.cwiseProduct(Y);
  const Mat Bc = Mat::Ones(B.rows(), B.cols()) - B;

  TrainResult res;
  res.dict = D0;
  res.F = F0;
  Mat& D = res.dict.atoms;
  TrainTrace& trace = res.trace;
  const double const_val = 1.0 / std::sqrt(static_cast<double>(n));

  for (int iter = 0; iter < cfg.niter; ++iter) {
    res.code = encode_all_masked(D, Y, B, cfg.sparsity, cfg.threads);
    const Mat& X = res.code.coefficients;

    Mat H = X * X.transpose();
    if (cfg.mu != 0.0) H.noalias() += cfg.mu * (res.F * res.F.transpose());

    double prev_obj = (Ym - B.cwiseProduct(D * X)).squaredNorm();
    for (int inner = 0; inner < n_dico; ++inner) {
      // missing values replaced by the current estimate D X
      Mat YB = Ym + Bc.cwiseProduct(D * X);
      SpdSolveInfo sinfo;
      Mat Z = spd_solve(H, X * YB.transpose(), &sinfo);
      if (sinfo.ridge > 0.0) ++trace.ridge_events;
      D = proj_maxnorm(Z.transpose());
      if (res.dict.has_constant_atom) D.col(p - 1).setConstant(const_val);
      double obj = (Ym - B.cwiseProduct(D * X)).squaredNorm();
      if (prev_obj > 0.0) {
        double inc = (obj - prev_obj) / prev_obj;
        if (inc > trace.max_inner_loss_increase) trace.max_inner_loss_increase = inc;
      }
      prev_obj = obj;
    }

    trace.loss.push_back(prev_obj);

    bool exact = true;
    Mat Finit = nullspace_or_trailing_basis(D, p - n, &exact);
    if (!exact) ++trace.basis_fallbacks;
    res.F = stiefel_sgd(Finit, res.dict, cfg.mu * cfg.mu_sgd_factor, cfg.tau, cfg.n_sgd, params,
                        mix_seed(cfg.seed, static_cast<std::uint64_t>(iter)), &trace);
  }

  trace.wall_time_sec = seconds_since(t0);
  return res;
}

}  // namespace mstar
