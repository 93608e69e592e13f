#pragma once

#include "mstar/dictionary.hpp"

namespace mstar {

// Fraction of observed (nonzero) entries of a {0,1} mask.
double mask_coverage(const Mat& B);
void validate_mask(const Mat& B, const Mat& Y);

struct WksvdOptions {
  bool reseed_unused_atoms = false;
  int threads = 0;
};

// Weighted KSVD: masked OMP coding, then per-atom weighted rank-one updates
// solved by n_dico fill-then-SVD passes (missing entries replaced by the
// current rank-one estimate). With an all-ones mask the trajectory matches
// ksvd exactly.
TrainResult wksvd(const Dictionary& D0, const Mat& Y, const Mat& B, int S, int niter,
                  int n_dico, const WksvdOptions& opts = {});

// Penalized inpainting learner: masked OMP coding, n_dico fill-and-solve
// D-updates (Y_B = B ⊙ Y + (1-B) ⊙ D X, then the coupled normal equations and
// the max-norm projection), and the Stiefel SGD F-step per outer iteration.
TrainResult train_penalized_inpaint(const Dictionary& D0, const Mat& F0, const Mat& Y,
                                    const Mat& B, const TrainConfig& cfg, int n_dico,
                                    const SmoothingParams& params = {});

}  // namespace mstar
