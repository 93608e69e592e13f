#pragma once

#include <string>
#include <vector>

#include "mstar/minimax.hpp"
#include "mstar/sparse_coding.hpp"

namespace mstar {

enum class AdmissibleSet { unit_columns, max_norm_one };

struct Dictionary {
  Mat atoms;  // n x p
  AdmissibleSet admissible_set = AdmissibleSet::unit_columns;
  bool has_constant_atom = false;  // last column fixed to 1/sqrt(n), never trained

  int n() const { return static_cast<int>(atoms.rows()); }
  int p() const { return static_cast<int>(atoms.cols()); }
  void validate(double tol = 1e-10) const;  // throws when the declared set is violated
};

Dictionary make_gaussian_dictionary(int n, int p, std::uint64_t seed, bool constant_atom,
                                    AdmissibleSet set);
// All-constant columns of unit norm (the deterministic-initialization study).
Dictionary make_constant_dictionary(int n, int p, bool constant_atom, AdmissibleSet set);

// Global rescale by the maximum column norm; leaves the nullspace unchanged.
Mat proj_maxnorm(const Mat& D);

struct TrainConfig {
  int sparsity = 3;
  int niter = 20;
  double penalty_weight = 0.0;  // exposed for completeness; the F-step folds it
                                // into tau (tau and n_sgd are the knobs)
  double mu = 0.0;              // coupling weight of the D-update
  double mu_sgd_factor = 1e-3;  // the SGD coupling uses mu_sgd_factor * mu
  double tau = 1e-3;
  int n_sgd = 50;
  std::uint64_t seed = 0;
  bool reseed_unused_atoms = false;  // re-seed empty-support atoms from the
                                     // worst-represented column (default: leave unchanged)
  int trace_mstar_every = 0;         // sample the M* of the iterate every k iterations
  long long trace_mstar_samples = 64;
  int threads = 0;
};

struct TrainTrace {
  std::vector<double> loss;    // ||Y - D X||_F^2 per iteration
  std::vector<double> mstar;   // NaN where not sampled
  double wall_time_sec = 0.0;
  double max_column_loss_increase = 0.0;  // largest per-column-update increase (rel.)
  double max_inner_loss_increase = 0.0;   // largest masked-objective increase across
                                          // weighted rank-one / fill-and-solve passes
  double max_stiefel_orthodev = 0.0;      // max ||F^T F - I||_F seen after SGD steps
  int ridge_events = 0;
  int basis_fallbacks = 0;  // rank-deficient iterates handled by the trailing-basis fallback
  std::vector<std::string> warnings;
};

struct TrainResult {
  Dictionary dict;
  SparseCode code;
  Mat F;  // nullspace iterate (empty for ksvd)
  TrainTrace trace;
};

struct KsvdOptions {
  bool reseed_unused_atoms = false;
  int threads = 0;
  int trace_mstar_every = 0;
  long long trace_mstar_samples = 64;
  std::uint64_t seed = 0;  // used only by the M* trace
};

// Alternating OMP coding and per-atom rank-one updates restricted to each
// atom's support; atoms with empty support are left unchanged unless
// reseeding is requested. D0 must have unit columns.
TrainResult ksvd(const Dictionary& D0, const Mat& Y, int S, int niter,
                 const KsvdOptions& opts = {});

// Projected stochastic gradient descent on the orthonormal-column manifold:
// each step draws g, takes the regularized-value gradient plus the coupling
// term 2*mu*D^T D*F, projects onto the tangent space, steps by tau, and
// re-projects via the polar factor.
Mat stiefel_sgd(const Mat& F0, const Dictionary& D, double mu, double tau, int n_sgd,
                const SmoothingParams& params, std::uint64_t seed, TrainTrace* trace = nullptr);

// Penalized learner: OMP coding, closed-form D-update
// proj_maxnorm(Y X^T (X X^T + mu F F^T)^{-1}) with the constant atom restored,
// then the F-step initialized at the nullspace of the current iterate.
TrainResult train_penalized(const Dictionary& D0, const Mat& F0, const Mat& Y,
                            const TrainConfig& cfg, const SmoothingParams& params = {});

// Orthonormal basis minimizing ||D F||_F over orthonormal-column F: the exact
// nullspace when D has full row rank, the trailing right singular subspace
// otherwise (used to keep deterministic-initialization runs defined).
Mat nullspace_or_trailing_basis(const Mat& D, int dim, bool* exact = nullptr);

// Flat binary container: 16-byte header (magic "MSTD", u32 version, u32 n,
// u32 p), then n*p row-major little-endian doubles. A JSON sidecar
// "<path>.json" carries admissible_set, has_constant_atom and free-form
// metadata (seed, config echo).
void save_dictionary(const Dictionary& dict, const std::string& path,
                     const std::string& sidecar_extra_json = "");
Dictionary load_dictionary(const std::string& path);

}  // namespace mstar
