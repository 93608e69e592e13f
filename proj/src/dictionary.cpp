#include "mstar/dictionary.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

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

// sign convention for rank-one updates: first nonzero entry of the atom
// positive, compensated in the code row
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

void maybe_trace_mstar(const Mat& D, int iter, int every, long long samples,
                       std::uint64_t seed, int threads, TrainTrace& trace) {
  double val = std::numeric_limits<double>::quiet_NaN();
  if (every > 0 && iter % every == 0) {
    try {
      bool exact = true;
      Mat F = nullspace_or_trailing_basis(D, static_cast<int>(D.cols() - D.rows()), &exact);
      if (!exact) ++trace.basis_fallbacks;
      val = estimate_mstar(F, samples, mix_seed(seed, 0xC0FFEEull + static_cast<std::uint64_t>(iter)),
                           1e-4, threads)
                .mean;
    } catch (const std::exception& e) {
      trace.warnings.push_back(std::string("mstar trace failed: ") + e.what());
    }
  }
  trace.mstar.push_back(val);
}

}  // namespace

void Dictionary::validate(double tol) const {
  const int pn = n();
  if (pn < 1 || p() < 1) throw std::invalid_argument("dictionary: empty");
  Vec norms = atoms.colwise().norm();
  if (admissible_set == AdmissibleSet::unit_columns) {
    if ((norms.array() - 1.0).abs().maxCoeff() > tol)
      throw std::invalid_argument("dictionary: unit_columns invariant violated");
  } else {
    if (std::abs(norms.maxCoeff() - 1.0) > tol)
      throw std::invalid_argument("dictionary: max_norm_one invariant violated");
  }
  if (has_constant_atom) {
    Vec c = Vec::Constant(pn, 1.0 / std::sqrt(static_cast<double>(pn)));
    if ((atoms.col(p() - 1) - c).norm() > tol)
      throw std::invalid_argument("dictionary: constant atom invariant violated");
  }
}

Dictionary make_gaussian_dictionary(int n, int p, std::uint64_t seed, bool constant_atom,
                                    AdmissibleSet set) {
  SeededRng rng(seed, streams::kDictionaryInit);
  Mat D = gaussian_matrix(rng, n, p);
  for (int j = 0; j < p; ++j) {
    double nn = D.col(j).norm();
    if (nn == 0.0) {
      D.col(j).setZero();
      D(0, j) = 1.0;
    } else {
      D.col(j) /= nn;
    }
  }
  Dictionary dict;
  dict.atoms = D;
  dict.admissible_set = set;
  dict.has_constant_atom = constant_atom;
  if (constant_atom)
    dict.atoms.col(p - 1).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  return dict;
}

Dictionary make_constant_dictionary(int n, int p, bool constant_atom, AdmissibleSet set) {
  Dictionary dict;
  dict.atoms = Mat::Constant(n, p, 1.0 / std::sqrt(static_cast<double>(n)));
  dict.admissible_set = set;
  dict.has_constant_atom = constant_atom;
  return dict;
}

Mat proj_maxnorm(const Mat& D) {
  double mx = D.colwise().norm().maxCoeff();
  if (mx <= 0.0) throw std::invalid_argument("proj_maxnorm: zero matrix");
  return D / mx;
}

Mat nullspace_or_trailing_basis(const Mat& D, int dim, bool* exact) {
  const int n = static_cast<int>(D.rows());
  const int p = static_cast<int>(D.cols());
  if (dim < 1 || dim > p) throw std::invalid_argument("nullspace_or_trailing_basis: bad dim");
  Eigen::JacobiSVD<Mat> svd(D, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  double smax = sv.size() > 0 ? sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-10 * smax) ++rank;
  if (exact) *exact = (rank == n && dim <= p - n);
  return svd.matrixV().rightCols(dim);
}

TrainResult ksvd(const Dictionary& D0, const Mat& Y, int S, int niter, const KsvdOptions& opts) {
  auto t0 = Clock::now();
  if (D0.admissible_set != AdmissibleSet::unit_columns)
    throw std::invalid_argument("ksvd: D0 must be in the unit-columns set");
  D0.validate();
  const int n = D0.n();
  const int p = D0.p();
  const int m = static_cast<int>(Y.cols());
  if (Y.rows() != n) throw std::invalid_argument("ksvd: data dimension mismatch");
  if (niter < 1) throw std::invalid_argument("ksvd: niter must be >= 1");

  TrainResult res;
  res.dict = D0;
  Mat& D = res.dict.atoms;
  TrainTrace& trace = res.trace;
  if (m < p) trace.warnings.push_back("training set smaller than the atom count (m < p)");

  const int last_trainable = D0.has_constant_atom ? p - 1 : p;

  for (int iter = 0; iter < niter; ++iter) {
    res.code = encode_all(D, Y, S, opts.threads);
    Mat& X = res.code.coefficients;
    Mat E = Y - D * X;

    for (int l = 0; l < last_trainable; ++l) {
      std::vector<int> omega;
      for (int j = 0; j < m; ++j)
        if (X(l, j) != 0.0) omega.push_back(j);
      if (omega.empty()) {
        if (opts.reseed_unused_atoms) {
          int worst = 0;
          double worst_norm = -1.0;
          for (int j = 0; j < m; ++j) {
            double en = E.col(j).norm();
            if (en > worst_norm) {
              worst_norm = en;
              worst = j;
            }
          }
          if (worst_norm > 0.0) {
            D.col(l) = Y.col(worst) / Y.col(worst).norm();
            trace.warnings.push_back("reseeded unused atom " + std::to_string(l));
          }
        }
        continue;
      }
      const int no = static_cast<int>(omega.size());
      Mat Er(n, no);
      Vec x_old(no);
      for (int k = 0; k < no; ++k) {
        x_old[k] = X(l, omega[static_cast<size_t>(k)]);
        Er.col(k) = E.col(omega[static_cast<size_t>(k)]) + D.col(l) * x_old[k];
      }
      Rank1Factors r1 = rank1_svd(Er);
      if (!r1.converged) {
        trace.warnings.push_back("rank1_svd did not converge on atom " + std::to_string(l) +
                                 "; column update skipped");
        continue;
      }
      Vec u = r1.left, v = r1.right;
      fix_sign(u, v);
      Vec x_new = r1.singular * v;

      double before = (Er - D.col(l) * x_old.transpose()).squaredNorm();
      double after = (Er - u * x_new.transpose()).squaredNorm();
      if (before > 0.0) {
        double inc = (after - before) / before;
        if (inc > trace.max_column_loss_increase) trace.max_column_loss_increase = inc;
      }

      D.col(l) = u;
      for (int k = 0; k < no; ++k) {
        X(l, omega[static_cast<size_t>(k)]) = x_new[k];
        E.col(omega[static_cast<size_t>(k)]) = Er.col(k) - u * x_new[k];
      }
    }

    trace.loss.push_back(E.squaredNorm());
    maybe_trace_mstar(D, iter, opts.trace_mstar_every, opts.trace_mstar_samples, opts.seed,
                      opts.threads, trace);
  }

  trace.wall_time_sec = seconds_since(t0);
  return res;
}

Mat stiefel_sgd(const Mat& F0, const Dictionary& D, double mu, double tau, int n_sgd,
                const SmoothingParams& params, std::uint64_t seed, TrainTrace* trace) {
  const int q = static_cast<int>(F0.cols());
  Mat F = F0;
  Mat DtD = D.atoms.transpose() * D.atoms;
  for (int step = 0; step < n_sgd; ++step) {
    SeededRng rng(seed, streams::kStiefelSgdBase + static_cast<std::uint64_t>(step));
    Vec g(q);
    for (int j = 0; j < q; ++j) g[j] = rng.normal();
    Mat grad;
    try {
      grad = gradient_nu(F, g, params);
    } catch (const std::exception& e) {
      if (trace) trace->warnings.push_back(std::string("sgd step skipped: ") + e.what());
      continue;
    }
    if (mu != 0.0) grad.noalias() += 2.0 * mu * (DtD * F);
    // tangent projection at F: Z - F sym(F^T Z)
    Mat FtZ = F.transpose() * grad;
    Mat tangent = grad - F * (0.5 * (FtZ + FtZ.transpose()));
    F = orthonormalize(F - tau * tangent);
    if (trace) {
      double dev = (F.transpose() * F - Mat::Identity(q, q)).norm();
      if (dev > trace->max_stiefel_orthodev) trace->max_stiefel_orthodev = dev;
    }
  }
  return F;
}

TrainResult train_penalized(const Dictionary& D0, const Mat& F0, const Mat& Y,
                            const TrainConfig& cfg, const SmoothingParams& params) {
  auto t0 = Clock::now();
  if (D0.admissible_set != AdmissibleSet::max_norm_one)
    throw std::invalid_argument("train_penalized: D0 must be in the max-norm-one set");
  D0.validate();
  const int n = D0.n();
  const int p = D0.p();
  if (Y.rows() != n) throw std::invalid_argument("train_penalized: data dimension mismatch");
  if (F0.rows() != p || F0.cols() != p - n)
    throw std::invalid_argument("train_penalized: F0 must be p x (p - n)");
  if ((D0.atoms * F0).norm() > 1e-6 * std::max(1.0, D0.atoms.norm()))
    throw std::invalid_argument("train_penalized: F0 must annihilate D0");

  TrainResult res;
  res.dict = D0;
  res.F = F0;
  Mat& D = res.dict.atoms;
  TrainTrace& trace = res.trace;
  const double const_val = 1.0 / std::sqrt(static_cast<double>(n));

  for (int iter = 0; iter < cfg.niter; ++iter) {
    res.code = encode_all(D, Y, cfg.sparsity, cfg.threads);
    const Mat& X = res.code.coefficients;

    Mat H = X * X.transpose();
    if (cfg.mu != 0.0) H.noalias() += cfg.mu * (res.F * res.F.transpose());
    SpdSolveInfo sinfo;
    Mat Z = spd_solve(H, X * Y.transpose(), &sinfo);
    if (sinfo.ridge > 0.0) ++trace.ridge_events;
    D = proj_maxnorm(Z.transpose());
    if (res.dict.has_constant_atom) D.col(p - 1).setConstant(const_val);

    trace.loss.push_back((Y - D * X).squaredNorm());

    bool exact = true;
    Mat Finit = nullspace_or_trailing_basis(D, p - n, &exact);
    if (!exact) ++trace.basis_fallbacks;
    res.F = stiefel_sgd(Finit, res.dict, cfg.mu * cfg.mu_sgd_factor, cfg.tau, cfg.n_sgd, params,
                        mix_seed(cfg.seed, static_cast<std::uint64_t>(iter)), &trace);

    maybe_trace_mstar(D, iter, cfg.trace_mstar_every, cfg.trace_mstar_samples, cfg.seed,
                      cfg.threads, trace);
  }

  trace.wall_time_sec = seconds_since(t0);
  return res;
}

namespace {
constexpr char kMagic[4] = {'M', 'S', 'T', 'D'};
constexpr std::uint32_t kVersion = 1;

const char* admissible_name(AdmissibleSet s) {
  return s == AdmissibleSet::unit_columns ? "unit_columns" : "max_norm_one";
}
}  // namespace

void save_dictionary(const Dictionary& dict, const std::string& path,
                     const std::string& sidecar_extra_json) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_dictionary: cannot open " + path);
  std::uint32_t n = static_cast<std::uint32_t>(dict.n());
  std::uint32_t p = static_cast<std::uint32_t>(dict.p());
  f.write(kMagic, 4);
  f.write(reinterpret_cast<const char*>(&kVersion), 4);
  f.write(reinterpret_cast<const char*>(&n), 4);
  f.write(reinterpret_cast<const char*>(&p), 4);
  // row-major doubles, little-endian host assumed
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < p; ++j) {
      double v = dict.atoms(i, j);
      f.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!f) throw std::runtime_error("save_dictionary: write failed for " + path);
  f.close();

  nlohmann::ordered_json side;
  side["admissible_set"] = admissible_name(dict.admissible_set);
  side["has_constant_atom"] = dict.has_constant_atom;
  if (!sidecar_extra_json.empty()) side["meta"] = nlohmann::ordered_json::parse(sidecar_extra_json);
  std::ofstream sf(path + ".json");
  if (!sf) throw std::runtime_error("save_dictionary: cannot open sidecar for " + path);
  sf << side.dump(2) << "\n";
}

Dictionary load_dictionary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_dictionary: cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, n = 0, p = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&n), 4);
  f.read(reinterpret_cast<char*>(&p), 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_dictionary: bad magic in " + path);
  if (version != kVersion)
    throw std::runtime_error("load_dictionary: unsupported container version");
  if (n == 0 || p == 0 || n > 100000 || p > 1000000)
    throw std::runtime_error("load_dictionary: implausible dimensions in header");

  Dictionary dict;
  dict.atoms = Mat(n, p);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < p; ++j) {
      double v;
      f.read(reinterpret_cast<char*>(&v), 8);
      if (!f)
        throw std::runtime_error("load_dictionary: truncated payload at byte " +
                                 std::to_string(16 + 8 * (static_cast<std::size_t>(i) * p + j)));
      dict.atoms(i, j) = v;
    }

  std::ifstream sf(path + ".json");
  if (sf) {
    nlohmann::json side = nlohmann::json::parse(sf, nullptr, true, true);
    if (side.contains("admissible_set"))
      dict.admissible_set = side["admissible_set"] == "unit_columns"
                                ? AdmissibleSet::unit_columns
                                : AdmissibleSet::max_norm_one;
    if (side.contains("has_constant_atom")) dict.has_constant_atom = side["has_constant_atom"];
  } else {
    Vec norms = dict.atoms.colwise().norm();
    dict.admissible_set = ((norms.array() - 1.0).abs().maxCoeff() <= 1e-8)
                              ? AdmissibleSet::unit_columns
                              : AdmissibleSet::max_norm_one;
  }
  return dict;
}

}  // namespace mstar
