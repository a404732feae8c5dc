#include "sct/decompose.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sct/denoise.hpp"
#include "sct/errors.hpp"
#include "sct/parallel.hpp"
#include "sct/qp.hpp"
#include "sct/tv.hpp"

namespace sct {

namespace {

// Pseudo-inverse via SVD with a rank check; the condition number goes into
// the error message and the caller's diagnostics.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& basis, double* cond_out) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = (smin > 0.0) ? smax / smin
                                   : std::numeric_limits<double>::infinity();
  if (cond_out) *cond_out = cond;
  if (!(smin > smax * 1e-12))
    throw NumericalError(
        "basis matrix is rank deficient (condition number " +
        std::to_string(cond) + "); cannot invert");
  Eigen::VectorXd inv_sv = sv.cwiseInverse();
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

// Shared shape checks for all decomposition entry points.
void check_inputs(const Tensor3& x, const Eigen::MatrixXd& basis) {
  if (x.channels() != basis.rows())
    throw std::invalid_argument(
        "decompose: image channels != basis rows (bins)");
  if (basis.rows() < basis.cols())
    throw std::invalid_argument(
        "decompose: need at least as many bins as materials");
  if (!x.all_finite())
    throw std::invalid_argument("decompose: non-finite image tensor");
}

// Constrained per-pixel fraction update against coupling target u.
// Returns the exact per-pixel minimizer field and, through the two sums, the
// subproblem objective at the previous iterate and at the new one (both
// against the same u), for the descent log.
Tensor3 fraction_update(const PixelQpSolver& solver, const Tensor3& x,
                        const Tensor3& u, const Tensor3* prev,
                        double* obj_before, double* obj_after) {
  const int rows = x.rows(), cols = x.cols();
  const int n_bins = x.channels(), n_mat = u.channels();
  const long n_px = static_cast<long>(rows) * cols;
  Tensor3 f(rows, cols, n_mat);

  const double* xd = x.data().data();
  const double* ud = u.data().data();
  double* fd = f.data().data();
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (long p = 0; p < n_px; ++p) {
    Eigen::Map<const Eigen::VectorXd> x_px(xd + p * n_bins, n_bins);
    Eigen::Map<const Eigen::VectorXd> u_px(ud + p * n_mat, n_mat);
    Eigen::Map<Eigen::VectorXd> f_px(fd + p * n_mat, n_mat);
    f_px = solver.solve(x_px, u_px);
  }

  if (obj_before) {
    if (prev) {
      const double* pd = prev->data().data();
      double acc = 0.0;
      for (long p = 0; p < n_px; ++p)
        acc += solver.objective(
            Eigen::Map<const Eigen::VectorXd>(pd + p * n_mat, n_mat),
            Eigen::Map<const Eigen::VectorXd>(xd + p * n_bins, n_bins),
            Eigen::Map<const Eigen::VectorXd>(ud + p * n_mat, n_mat));
      *obj_before = acc;
    } else {
      *obj_before = std::numeric_limits<double>::quiet_NaN();
    }
  }
  if (obj_after) {
    double acc = 0.0;
    for (long p = 0; p < n_px; ++p)
      acc += solver.objective(
          Eigen::Map<const Eigen::VectorXd>(fd + p * n_mat, n_mat),
          Eigen::Map<const Eigen::VectorXd>(xd + p * n_bins, n_bins),
          Eigen::Map<const Eigen::VectorXd>(ud + p * n_mat, n_mat));
    *obj_after = acc;
  }
  return f;
}

double data_term(const Tensor3& x, const Eigen::MatrixXd& basis,
                 const Tensor3& f) {
  const long n_px = static_cast<long>(x.rows()) * x.cols();
  const int n_bins = x.channels(), n_mat = f.channels();
  const double* xd = x.data().data();
  const double* fd = f.data().data();
  double acc = 0.0;
  for (long p = 0; p < n_px; ++p) {
    Eigen::Map<const Eigen::VectorXd> x_px(xd + p * n_bins, n_bins);
    Eigen::Map<const Eigen::VectorXd> f_px(fd + p * n_mat, n_mat);
    acc += (x_px - basis * f_px).squaredNorm();
  }
  return 0.5 * acc;
}

double coupling_term(double eta, const Tensor3& f, const Tensor3& u) {
  double acc = 0.0;
  const auto& fd = f.data();
  const auto& ud = u.data();
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double d = fd[i] - ud[i];
    acc += d * d;
  }
  return 0.5 * eta * acc;
}

}  // namespace

void DlimdParams::validate(int n_materials) const {
  if (!(eta > 0.0)) throw std::invalid_argument("DlimdParams: eta must be > 0");
  if (sparsity < 1) throw std::invalid_argument("DlimdParams: sparsity < 1");
  if (eps.size() != n_materials)
    throw std::invalid_argument("DlimdParams: eps size != material count");
  if ((eps.array() < 0.0).any())
    throw std::invalid_argument("DlimdParams: negative eps");
  if (outer_iters < 1) throw std::invalid_argument("DlimdParams: outer_iters < 1");
  if (!(air.threshold > 0.0 && air.threshold <= 1.0))
    throw std::invalid_argument("DlimdParams: air threshold outside (0, 1]");
  if (stride < 1) throw std::invalid_argument("DlimdParams: stride < 1");
  if (prior_weight < 0.0)
    throw std::invalid_argument("DlimdParams: negative prior weight");
}

BasisEstimate estimate_attenuation_matrix(const Tensor3& x,
                                          const RoiMask& rois) {
  const int n_bins = x.channels();
  const int n_mat = rois.n_materials();
  if (n_mat < 1)
    throw std::invalid_argument("estimate_attenuation_matrix: no ROIs");
  const long n_px = static_cast<long>(x.rows()) * x.cols();

  BasisEstimate est;
  est.matrix.resize(n_bins, n_mat);
  est.stddev.resize(n_bins, n_mat);
  for (int m = 0; m < n_mat; ++m) {
    const auto& px_list = rois.pixels[m];
    if (px_list.empty())
      throw std::invalid_argument(
          "estimate_attenuation_matrix: empty ROI for material " +
          std::to_string(m));
    for (int n = 0; n < n_bins; ++n) {
      double sum = 0.0, sum_sq = 0.0;
      for (int p : px_list) {
        if (p < 0 || p >= n_px)
          throw std::invalid_argument(
              "estimate_attenuation_matrix: ROI pixel out of range");
        const double v = x.data()[static_cast<std::size_t>(p) * n_bins + n];
        sum += v;
        sum_sq += v * v;
      }
      const double mean = sum / px_list.size();
      est.matrix(n, m) = mean;
      est.stddev(n, m) =
          std::sqrt(std::max(0.0, sum_sq / px_list.size() - mean * mean));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(est.matrix);
  const auto& sv = svd.singularValues();
  est.condition_number = (sv(sv.size() - 1) > 0.0)
                             ? sv(0) / sv(sv.size() - 1)
                             : std::numeric_limits<double>::infinity();
  return est;
}

DecompositionResult diwet(const Tensor3& x, const Eigen::MatrixXd& basis) {
  check_inputs(x, basis);
  double cond = 0.0;
  const Eigen::MatrixXd pinv = pseudo_inverse(basis, &cond);
  const Eigen::MatrixXd f3 = pinv * mode_unfold(x, 3);

  DecompositionResult res;
  res.materials = mode_fold(f3, 3, x.rows(), x.cols(),
                            static_cast<int>(basis.cols()));
  res.air.resize(x.rows(), x.cols());
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c) {
      double total = 0.0;
      for (int m = 0; m < res.materials.channels(); ++m)
        total += res.materials(r, c, m);
      res.air(r, c) = std::min(1.0, std::max(0.0, 1.0 - total));
    }
  res.air_mask.assign(static_cast<std::size_t>(x.rows()) * x.cols(), 0);
  return res;
}

AirPassResult air_pass(const Tensor3& fractions, const Tensor3& x,
                       const Eigen::MatrixXd& basis,
                       const AirPassOptions& opts) {
  check_inputs(x, basis);
  if (fractions.channels() != basis.cols())
    throw std::invalid_argument("air_pass: fraction channels != basis columns");
  if (!(opts.threshold > 0.0 && opts.threshold <= 1.0))
    throw std::invalid_argument("air_pass: threshold outside (0, 1]");

  const int n_mat = static_cast<int>(basis.cols());
  const int n_bins = static_cast<int>(basis.rows());
  const long n_px = static_cast<long>(x.rows()) * x.cols();

  const Eigen::MatrixXd pinv = pseudo_inverse(basis, nullptr);
  // Least-attenuating basis column: the water-level reference for "this
  // pixel hardly attenuates at all".
  const double ref_level = basis.colwise().sum().minCoeff();
  const double atten_cut = opts.attenuation_frac * ref_level;

  AirPassResult res;
  res.materials = fractions;
  res.air.setZero(x.rows(), x.cols());
  res.mask.assign(n_px, 0);

  const double* xd = x.data().data();
  double* fd = res.materials.data().data();
  for (long p = 0; p < n_px; ++p) {
    Eigen::Map<const Eigen::VectorXd> x_px(xd + p * n_bins, n_bins);
    Eigen::Map<Eigen::VectorXd> f_px(fd + p * n_mat, n_mat);
    if (f_px.maxCoeff() <= opts.threshold) continue;
    const Eigen::VectorXd f_pinv = pinv * x_px;
    if ((basis * f_pinv).sum() >= atten_cut) continue;
    f_px = f_pinv;
    res.mask[p] = 1;
    const long r = p / x.cols(), c = p % x.cols();
    res.air(r, c) = std::min(1.0, std::max(0.0, 1.0 - f_pinv.sum()));
  }
  return res;
}

DecompositionResult di(const Tensor3& x, const Eigen::MatrixXd& basis,
                       const AirPassOptions& opts) {
  check_inputs(x, basis);
  const PixelQpSolver solver(basis, 0.0);
  const Tensor3 u(x.rows(), x.cols(), static_cast<int>(basis.cols()));
  double after = 0.0;
  Tensor3 f = fraction_update(solver, x, u, nullptr, nullptr, &after);
  AirPassResult ap = air_pass(f, x, basis, opts);

  DecompositionResult res;
  res.materials = std::move(ap.materials);
  res.air = std::move(ap.air);
  res.air_mask = std::move(ap.mask);
  IterationLog log;
  log.fstep_before = std::numeric_limits<double>::quiet_NaN();
  log.fstep_after = after;
  log.data_term = data_term(x, basis, res.materials);
  log.total_objective = log.data_term;
  res.iterations.push_back(log);
  return res;
}

DecompositionResult di_air_basis(const Tensor3& x,
                                 const Eigen::MatrixXd& basis,
                                 double air_epsilon) {
  check_inputs(x, basis);
  if (!(air_epsilon > 0.0))
    throw std::invalid_argument("di_air_basis: air_epsilon must be > 0");
  const int n_mat = static_cast<int>(basis.cols());
  Eigen::MatrixXd augmented(basis.rows(), n_mat + 1);
  augmented.leftCols(n_mat) = basis;
  augmented.col(n_mat).setConstant(air_epsilon);

  const PixelQpSolver solver(augmented, 0.0);
  const Tensor3 u(x.rows(), x.cols(), n_mat + 1);
  double after = 0.0;
  Tensor3 f = fraction_update(solver, x, u, nullptr, nullptr, &after);

  DecompositionResult res;
  res.materials = Tensor3(x.rows(), x.cols(), n_mat);
  res.air.resize(x.rows(), x.cols());
  res.air_mask.assign(static_cast<std::size_t>(x.rows()) * x.cols(), 0);
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c) {
      for (int m = 0; m < n_mat; ++m) res.materials(r, c, m) = f(r, c, m);
      res.air(r, c) = f(r, c, n_mat);
      if (res.air(r, c) > 0.5)
        res.air_mask[static_cast<std::size_t>(r) * x.cols() + c] = 1;
    }
  IterationLog log;
  log.fstep_before = std::numeric_limits<double>::quiet_NaN();
  log.fstep_after = after;
  log.data_term = data_term(x, augmented, f);
  log.total_objective = log.data_term;
  res.iterations.push_back(log);
  return res;
}

DecompositionResult tvmd(const Tensor3& x, const Eigen::MatrixXd& basis,
                         const DlimdParams& params) {
  check_inputs(x, basis);
  const int n_mat = static_cast<int>(basis.cols());
  params.validate(n_mat);
  if (params.air_as_material)
    throw std::invalid_argument(
        "tvmd: the air-as-material strategy applies to DI only");
  if (!(params.tv_lambda > 0.0))
    throw std::invalid_argument("tvmd: tv_lambda must be > 0");

  const PixelQpSolver solver(basis, params.eta);
  Tensor3 u(x.rows(), x.cols(), n_mat);
  Tensor3 f_prev;
  DecompositionResult res;
  Tensor3 f;

  for (int k = 0; k < params.outer_iters; ++k) {
    IterationLog log;
    f = fraction_update(solver, x, u, k > 0 ? &f_prev : nullptr,
                        &log.fstep_before, &log.fstep_after);
    f_prev = f;
    for (int m = 0; m < n_mat; ++m)
      u.set_channel(m, tv_prox(f.channel(m), params.tv_lambda / params.eta,
                               params.tv_inner_iters));
    log.data_term = data_term(x, basis, f);
    log.coupling_term = coupling_term(params.eta, f, u);
    log.total_objective = log.data_term + log.coupling_term;
    res.iterations.push_back(log);
  }

  AirPassResult ap = air_pass(f, x, basis, params.air);
  res.materials = std::move(ap.materials);
  res.air = std::move(ap.air);
  res.air_mask = std::move(ap.mask);
  return res;
}

DecompositionResult dlimd(const Tensor3& x, const Eigen::MatrixXd& basis,
                          const Dictionary& dict, const DlimdParams& params) {
  check_inputs(x, basis);
  const int n_mat = static_cast<int>(basis.cols());
  params.validate(n_mat);
  dict.validate();
  if (params.air_as_material)
    throw std::invalid_argument(
        "dlimd: the air-as-material strategy applies to DI only");
  if (dict.patch_size > x.rows() || dict.patch_size > x.cols())
    throw std::invalid_argument("dlimd: dictionary patch exceeds image size");

  const PixelQpSolver solver(basis, params.eta);
  Tensor3 u(x.rows(), x.cols(), n_mat);
  Tensor3 f_constr_prev;
  DecompositionResult res;

  for (int k = 0; k < params.outer_iters; ++k) {
    IterationLog log;
    Tensor3 f_constr =
        fraction_update(solver, x, u, k > 0 ? &f_constr_prev : nullptr,
                        &log.fstep_before, &log.fstep_after);

    AirPassResult ap = air_pass(f_constr, x, basis, params.air);
    f_constr_prev = std::move(f_constr);

    // Coupling-target refresh: denoise each material on the normalized
    // scale. Air pixels carry raw pseudo-inverse values whose noise would
    // dwarf the [0, 1] object range, collapse the min-max normalization and
    // flood the patch prior; physically they hold no material, so the
    // denoiser sees them as zero.
    Tensor3 feedback = ap.materials;
    {
      const long n_px = static_cast<long>(x.rows()) * x.cols();
      for (long p = 0; p < n_px; ++p) {
        if (!ap.mask[p]) continue;
        for (int m = 0; m < n_mat; ++m) feedback.data()[p * n_mat + m] = 0.0;
      }
    }
    auto [f_norm, rec] = normalize_materials(feedback);
    double patch_resid = 0.0, l0 = 0.0;
    for (int m = 0; m < n_mat; ++m) {
      DenoiseOptions d_opts;
      d_opts.eps = params.eps[m];
      d_opts.max_sparsity = params.sparsity;
      d_opts.prior_weight = params.prior_weight;
      d_opts.stride = params.stride;
      DenoiseStats stats;
      f_norm.set_channel(
          m, dictionary_denoise(f_norm.channel(m), dict, d_opts, &stats));
      patch_resid += stats.patch_residual_sq;
      l0 += stats.code_l0;
    }
    u = denormalize_materials(f_norm, rec);

    log.data_term = data_term(x, basis, ap.materials);
    log.coupling_term = coupling_term(params.eta, ap.materials, u);
    log.patch_term =
        0.5 * params.prior_weight * params.eta * patch_resid;
    log.code_l0 = l0;
    log.total_objective = log.data_term + log.coupling_term + log.patch_term;
    res.iterations.push_back(log);

    if (k == params.outer_iters - 1) {
      res.materials = std::move(ap.materials);
      res.air = std::move(ap.air);
      res.air_mask = std::move(ap.mask);
    }
  }
  return res;
}

}  // namespace sct
