#include "mstar/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mstar {

Vec project_l1_ball(const Vec& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_l1_ball: radius must be positive");
  const int n = static_cast<int>(v.size());
  Vec a = v.cwiseAbs();
  if (a.sum() <= radius) return v;
  std::vector<double> w(a.data(), a.data() + n);
  std::sort(w.begin(), w.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += w[i];
    double t = (cum - radius) / static_cast<double>(i + 1);
    if (w[i] - t > 0.0)
      theta = t;
    else
      break;
  }
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    double m = a[i] - theta;
    out[i] = (m > 0.0) ? (v[i] > 0.0 ? m : -m) : 0.0;
  }
  return out;
}

namespace {

struct ProxState {
  Vec z;      // F y
  Vec proj;   // projection of z onto the unit l1 ball
  Vec x;      // (z - proj) / lambda : prox output, exactly dual-feasible for y
  double dist2 = 0.0;
  double z_l1 = 0.0;
};

void eval_state(const Mat& F, const Vec& y, double lambda, ProxState& s) {
  s.z.noalias() = F * y;
  s.z_l1 = s.z.lpNorm<1>();
  s.proj = project_l1_ball(s.z, 1.0);
  s.x = (s.z - s.proj) / lambda;
  s.dist2 = (s.z - s.proj).squaredNorm();
}

double dual_value(const Vec& y, const Vec& g, double lambda, double sigma, const ProxState& s) {
  return y.dot(g) - s.dist2 / (2.0 * lambda) - y.squaredNorm() / (2.0 * sigma);
}

MinimaxSolution solve_regularized_core(const Mat& F, const Vec& g, const SmoothingParams& params,
                                       double tol, int max_iter, const Vec* warm_start_y,
                                       const Mat* gram) {
  if (!(params.lambda_s > 0.0) || !(params.sigma_s > 0.0))
    throw std::invalid_argument("solve_regularized: smoothing parameters must be positive");
  const int q = static_cast<int>(F.cols());
  if (g.size() != q) throw std::invalid_argument("solve_regularized: g length must match F columns");
  const int p = static_cast<int>(F.rows());
  const double lambda = params.lambda_s;
  const double sigma = params.sigma_s;

  Mat G_local;
  if (!gram) {
    G_local = F.transpose() * F;
    gram = &G_local;
  }
  const Mat& G = *gram;

  Vec y = (warm_start_y && warm_start_y->size() == q) ? *warm_start_y : Vec::Zero(q);
  const double grad_tol = tol * std::max(1.0, g.norm());
  const double lip = G.trace() / lambda + 1.0 / sigma;  // Frobenius bound on the dual gradient

  ProxState s;
  eval_state(F, y, lambda, s);
  double D_cur = dual_value(y, g, lambda, sigma, s);

  MinimaxSolution out;
  Vec grad(q), d(q);
  int it = 0;
  bool ok = false;
  std::vector<int> active;
  active.reserve(p);

  for (; it < max_iter; ++it) {
    grad = g - F.transpose() * s.x - y / sigma;
    if (grad.norm() <= grad_tol) {
      ok = true;
      break;
    }

    // semismooth Newton direction from the generalized Hessian
    //   H = (1/lambda) (F_inactive^T F_inactive + u u^T / |active|) + I/sigma
    if (s.z_l1 <= 1.0) {
      d = sigma * grad;  // prox is the identity here, H = I/sigma
    } else {
      active.clear();
      Vec u = Vec::Zero(q);
      for (int i = 0; i < p; ++i) {
        if (s.proj[i] != 0.0) {
          active.push_back(i);
          if (s.z[i] > 0.0)
            u += F.row(i).transpose();
          else
            u -= F.row(i).transpose();
        }
      }
      const int na = static_cast<int>(active.size());
      Mat W(q, q);
      if (p - na <= na) {
        W.setZero();
        int k = 0;
        for (int i = 0; i < p; ++i) {
          if (k < na && active[static_cast<size_t>(k)] == i) {
            ++k;
            continue;
          }
          W.noalias() += F.row(i).transpose() * F.row(i);
        }
      } else {
        W = G;
        for (int i : active) W.noalias() -= F.row(i).transpose() * F.row(i);
      }
      W.noalias() += (1.0 / static_cast<double>(na)) * u * u.transpose();
      W.diagonal().array() += lambda / sigma;
      Eigen::LDLT<Mat> ldlt(W);
      if (ldlt.info() == Eigen::Success) {
        d = lambda * ldlt.solve(grad);
        if (!(grad.dot(d) > 0.0) || !d.allFinite()) d = grad / lip;
      } else {
        d = grad / lip;
      }
    }

    // backtracking line search on the concave dual
    const double gTd = grad.dot(d);
    double step = 1.0;
    bool accepted = false;
    ProxState trial;
    Vec y_trial;
    double D_trial = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      y_trial = y + step * d;
      eval_state(F, y_trial, lambda, trial);
      D_trial = dual_value(y_trial, g, lambda, sigma, trial);
      if (D_trial >= D_cur + 1e-4 * step * gTd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      y_trial = y + grad / lip;
      eval_state(F, y_trial, lambda, trial);
      D_trial = dual_value(y_trial, g, lambda, sigma, trial);
      if (D_trial <= D_cur) break;  // at the numerical floor
    }
    y.swap(y_trial);
    s.z.swap(trial.z);
    s.proj.swap(trial.proj);
    s.x.swap(trial.x);
    s.dist2 = trial.dist2;
    s.z_l1 = trial.z_l1;
    D_cur = D_trial;
  }

  out.x_star = s.x;
  out.r_star = g - F.transpose() * s.x;
  out.y_star = y;
  out.value = s.x.lpNorm<Eigen::Infinity>() + 0.5 * lambda * s.x.squaredNorm() +
              0.5 * sigma * out.r_star.squaredNorm();
  out.lower_bound = D_cur;
  out.status = ok ? SolveStatus::converged : SolveStatus::max_iter;
  out.iterations = it;
  return out;
}

// Snaps a near-optimal point to the LP vertex: coordinates at the max level
// keep only their signs, the rest plus the level itself solve the equality
// constraints. Updates (x, ub) when the snapped point is feasible and better.
bool polish_vertex(const Mat& F, const Vec& g, Vec& x, double& ub, double rel_gap) {
  const int p = static_cast<int>(F.rows());
  const int q = static_cast<int>(F.cols());
  const double t = ub;
  if (!(t > 0.0)) return false;
  const double band = std::min(0.1, 10.0 * rel_gap + 1e-9);
  std::vector<int> at_max, interior;
  for (int i = 0; i < p; ++i) {
    if (std::abs(x[i]) >= t * (1.0 - band))
      at_max.push_back(i);
    else
      interior.push_back(i);
  }
  const int ni = static_cast<int>(interior.size());
  if (at_max.empty() || ni + 1 > q) return false;

  Mat Asys(q, ni + 1);
  for (int k = 0; k < ni; ++k) Asys.col(k) = F.row(interior[static_cast<size_t>(k)]).transpose();
  Vec fe = Vec::Zero(q);
  for (int i : at_max) fe += (x[i] >= 0.0 ? 1.0 : -1.0) * F.row(i).transpose();
  Asys.col(ni) = fe;

  Vec sol = Asys.colPivHouseholderQr().solve(g);
  const double t_pol = sol[ni];
  if (!std::isfinite(t_pol) || !(t_pol > 0.0) || t_pol > 1.5 * t) return false;

  Vec xp = Vec::Zero(p);
  for (int i : at_max) xp[i] = (x[i] >= 0.0 ? t_pol : -t_pol);
  for (int k = 0; k < ni; ++k) {
    double v = sol[k];
    if (std::abs(v) > t_pol * (1.0 + 1e-9)) return false;
    xp[interior[static_cast<size_t>(k)]] = v;
  }
  if ((F.transpose() * xp - g).norm() > 1e-10 * (1.0 + g.norm())) return false;
  const double ub_pol = xp.lpNorm<Eigen::Infinity>();
  if (ub_pol < ub) {
    ub = ub_pol;
    x = xp;
    return true;
  }
  return false;
}

}  // namespace

MinimaxSolution solve_regularized(const Mat& F, const Vec& g, const SmoothingParams& params,
                                  double tol, int max_iter, const Vec* warm_start_y) {
  return solve_regularized_core(F, g, params, tol, max_iter, warm_start_y, nullptr);
}

MinimaxSolution solve_linf_lp(const Mat& F, const Vec& g, double tol) {
  const int p = static_cast<int>(F.rows());
  const int q = static_cast<int>(F.cols());
  if (g.size() != q) throw std::invalid_argument("solve_linf_lp: g length must match F columns");
  const Mat G = F.transpose() * F;
  if ((G - Mat::Identity(q, q)).cwiseAbs().maxCoeff() > 1e-6)
    throw std::invalid_argument("solve_linf_lp: F must have orthonormal columns");

  MinimaxSolution out;
  out.r_star = Vec::Zero(q);
  const double gn = g.norm();
  if (gn == 0.0) {
    out.x_star = Vec::Zero(p);
    out.y_star = Vec::Zero(q);
    return out;
  }
  const Vec ghat = g / gn;

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  Vec x_best = Vec::Zero(p), y_best = Vec::Zero(q);
  Vec y = Vec::Zero(q);
  int total_iters = 0;
  bool certified = false;

  // decreasing smoothing schedule with warm starts; extended past 1e-6 only
  // when the certificate bracket has not closed
  double lambda = 1e-2;
  const double lambda_floor = 1e-12;
  while (true) {
    SmoothingParams sp{lambda, 1.0 / lambda};
    MinimaxSolution sol = solve_regularized_core(F, ghat, sp, 1e-11, 2000, &y, &G);
    total_iters += sol.iterations;
    y = sol.y_star;

    Vec x_feas = sol.x_star + F * (ghat - F.transpose() * sol.x_star);
    double ub_c = x_feas.lpNorm<Eigen::Infinity>();
    if (ub_c < ub) {
      ub = ub_c;
      x_best = x_feas;
    }
    double y_l1 = (F * y).lpNorm<1>();
    Vec y_hat = (y_l1 > 1.0) ? Vec(y / y_l1) : y;
    double lb_c = ghat.dot(y_hat);
    if (lb_c > lb) {
      lb = lb_c;
      y_best = y_hat;
    }

    double rel_gap = (ub - lb) / std::max(1.0, ub);
    polish_vertex(F, ghat, x_best, ub, std::max(rel_gap, 0.0));

    if (ub - lb <= tol * std::max(1.0, ub)) {
      certified = true;
      break;
    }
    if (lambda <= lambda_floor) break;
    lambda *= 1e-2;
  }

  out.x_star = x_best * gn;
  out.y_star = y_best;
  out.value = ub * gn;
  out.lower_bound = lb * gn;
  out.status = certified ? SolveStatus::converged : SolveStatus::max_iter;
  out.iterations = total_iters;
  return out;
}

Mat gradient_nu(const Mat& F, const Vec& g, const SmoothingParams& params, double tol) {
  MinimaxSolution sol = solve_regularized(F, g, params, tol);
  return -sol.x_star * sol.y_star.transpose();
}

}  // namespace mstar
