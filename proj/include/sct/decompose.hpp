#ifndef SCT_DECOMPOSE_HPP
#define SCT_DECOMPOSE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "sct/dictionary.hpp"
#include "sct/tensor.hpp"

namespace sct {

/// Per-material sets of pixels known to be pure material. Pixel indices are
/// row-major linear: r * cols + c.
struct RoiMask {
  std::vector<std::vector<int>> pixels;  // one list per material

  int n_materials() const { return static_cast<int>(pixels.size()); }
};

/// Basis matrix estimated from uniform regions, with per-entry standard
/// deviation and the matrix condition number as quality diagnostics.
struct BasisEstimate {
  Eigen::MatrixXd matrix;  // N x M
  Eigen::MatrixXd stddev;  // N x M
  double condition_number = 0.0;
};

/// Column m of the estimate is the mean of each bin image over ROI m.
/// Throws std::invalid_argument on an empty ROI or out-of-range pixel.
BasisEstimate estimate_attenuation_matrix(const Tensor3& x, const RoiMask& rois);

struct AirPassOptions {
  double threshold = 0.99;        // largest-fraction trigger, in (0, 1]
  double attenuation_frac = 0.05; // of the least-attenuating basis column sum
};

struct DlimdParams {
  double eta = 0.003;            // coupling weight of the split
  int sparsity = 10;             // decomposition OMP budget L
  Eigen::VectorXd eps;           // per-material coding tolerance (normalized scale)
  int outer_iters = 30;
  AirPassOptions air;
  double prior_weight = 1.0;     // tau_m of the denoising blend
  int stride = 1;                // denoising patch stride
  double tv_lambda = 5e-4;       // TVMD regularization weight
  int tv_inner_iters = 20;
  bool air_as_material = false;  // strategy 1: augment the basis with an air column
  double air_epsilon = 1e-4;     // strategy-1 air attenuation (cm^-1)

  void validate(int n_materials) const;
};

/// Per-iteration diagnostics of the iterative methods. The fraction-update
/// objective pair is evaluated at the same coupling target u, so
/// `fstep_after <= fstep_before` whenever both are present (the per-pixel
/// minimization is exact); `fstep_before` is NaN on the first iteration,
/// which has no feasible predecessor.
struct IterationLog {
  double fstep_before = 0.0;
  double fstep_after = 0.0;
  double data_term = 0.0;        // 1/2 ||X3 - B F3||^2 after the air pass
  double coupling_term = 0.0;    // eta/2 ||F - U||^2 with the fresh U
  double patch_term = 0.0;       // sum_m (tau eta / 2) ||H_i(U_m) - D b||^2
  double code_l0 = 0.0;          // sum of code nonzeros across materials
  double total_objective = 0.0;  // data + coupling + patch (+ unit-weight l0)
};

struct DecompositionResult {
  Tensor3 materials;
  Eigen::MatrixXd air;
  std::vector<std::uint8_t> air_mask;  // rows*cols, row-major r*cols+c
  std::vector<IterationLog> iterations;
};

/// Raw pseudo-inverse decomposition, no constraints. The air map is
/// 1 - sum f clipped to [0, 1], reported for display only. Throws
/// NumericalError (with the condition number) when the basis is
/// rank-deficient.
DecompositionResult diwet(const Tensor3& x, const Eigen::MatrixXd& basis);

/// Air handling strategy 2: flags a pixel as air when its largest material
/// fraction exceeds opts.threshold AND its pseudo-inverse-predicted total
/// attenuation falls below opts.attenuation_frac of the least-attenuating
/// basis column sum. Flagged pixels are re-solved unconstrained and get
/// AIR = 1 - sum f (clipped); others get AIR = 0.
struct AirPassResult {
  Tensor3 materials;
  Eigen::MatrixXd air;
  std::vector<std::uint8_t> mask;
};
AirPassResult air_pass(const Tensor3& fractions, const Tensor3& x,
                       const Eigen::MatrixXd& basis, const AirPassOptions& opts);

/// Constrained direct inversion: the per-pixel sum-to-one/box solve with
/// eta = 0 followed by the air pass.
DecompositionResult di(const Tensor3& x, const Eigen::MatrixXd& basis,
                       const AirPassOptions& opts = {});

/// Air handling strategy 1 for DI: augments the basis with a constant
/// `air_epsilon` column, solves the constrained system over M+1 materials
/// and returns the extra channel as the air map (no threshold pass). Kept
/// for comparison against the default strategy.
DecompositionResult di_air_basis(const Tensor3& x, const Eigen::MatrixXd& basis,
                                 double air_epsilon = 1e-4);

/// Total-variation regularized decomposition: alternates the constrained
/// per-pixel solve (coupling target = TV-denoised estimate) with anisotropic
/// TV proximal steps; air pass at the end.
DecompositionResult tvmd(const Tensor3& x, const Eigen::MatrixXd& basis,
                         const DlimdParams& params);

/// Dictionary-learning decomposition: per outer iteration (a) constrained
/// per-pixel solve against the coupling target, (b) air pass, (c) per-material
/// dictionary denoising on the normalized scale to refresh the target.
DecompositionResult dlimd(const Tensor3& x, const Eigen::MatrixXd& basis,
                          const Dictionary& dict, const DlimdParams& params);

}  // namespace sct

#endif
