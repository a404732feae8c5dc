#ifndef SCT_DENOISE_HPP
#define SCT_DENOISE_HPP

#include <Eigen/Core>

#include "sct/dictionary.hpp"

namespace sct {

struct DenoiseOptions {
  double eps = 0.0;          // per-patch residual-norm tolerance for coding
  int max_sparsity = 10;     // OMP budget L
  double prior_weight = 1.0; // w: strength of the patch prior vs fidelity
  int stride = 1;            // patch grid stride
};

/// Diagnostics of one denoising pass (terms of the patch-prior objective).
struct DenoiseStats {
  double patch_residual_sq = 0.0;  // sum_i ||H_i(out) - D b_i||^2
  double code_l0 = 0.0;            // sum_i ||b_i||_0
};

/// Sparse-coding image denoiser: codes every stride-grid patch with
/// error-constrained OMP and blends the coded patches with the input through
/// the closed-form minimizer of
///   1/2 ||out - in||^2 + w/2 sum_i ||H_i(out) - D b_i||^2,
/// i.e. out = (in + w * sum_i H_i^T(D b_i)) / (1 + w * coverage) per pixel.
/// w = 0 returns the input unchanged.
Eigen::MatrixXd dictionary_denoise(const Eigen::MatrixXd& image,
                                   const Dictionary& dict,
                                   const DenoiseOptions& opts,
                                   DenoiseStats* stats = nullptr);

}  // namespace sct

#endif
