#include "sct/denoise.hpp"

#include <omp.h>

#include <stdexcept>
#include <vector>

#include "sct/parallel.hpp"
#include "sct/patches.hpp"

namespace sct {

Eigen::MatrixXd dictionary_denoise(const Eigen::MatrixXd& image,
                                   const Dictionary& dict,
                                   const DenoiseOptions& opts,
                                   DenoiseStats* stats) {
  if (opts.eps < 0.0)
    throw std::invalid_argument("dictionary_denoise: negative eps");
  if (opts.max_sparsity < 1)
    throw std::invalid_argument("dictionary_denoise: max_sparsity < 1");
  if (opts.prior_weight < 0.0)
    throw std::invalid_argument("dictionary_denoise: negative prior weight");
  const int s = dict.patch_size;
  if (s * s != dict.signal_size())
    throw std::invalid_argument("dictionary_denoise: dictionary patch size");
  if (image.rows() < s || image.cols() < s)
    throw std::invalid_argument(
        "dictionary_denoise: image smaller than dictionary patch");

  PatchSet ps = extract_patches(image, s, opts.stride);
  const int n_patches = static_cast<int>(ps.patches.cols());
  const int n_atoms = dict.atom_count();

  // The dictionary represents AC content: code each patch with its mean
  // removed and restore the mean in the coded patch.
  Eigen::VectorXd means(n_patches);
  for (int i = 0; i < n_patches; ++i) {
    means[i] = ps.patches.col(i).mean();
    ps.patches.col(i).array() -= means[i];
  }

  OmpSolver solver(dict.atoms);
  Eigen::MatrixXd alpha0(n_atoms, n_patches);
  alpha0.noalias() = dict.atoms.transpose() * ps.patches;

  PatchSet coded;
  coded.patch_size = s;
  coded.anchors = ps.anchors;
  coded.patches.resize(s * s, n_patches);

  const int n_threads = max_threads();
  std::vector<OmpSolver::Workspace> workspaces(n_threads);
  std::vector<double> l0_per_patch(stats ? n_patches : 0);
#pragma omp parallel for schedule(static) num_threads(n_threads)
  for (int i = 0; i < n_patches; ++i) {
    auto& ws = workspaces[omp_get_thread_num()];
    const SparseCode code = solver.encode_precomputed(
        alpha0.col(i), ps.patches.col(i).squaredNorm(), opts.max_sparsity,
        opts.eps, ws);
    coded.patches.col(i) =
        sparse_reconstruct(dict.atoms, code).array() + means[i];
    if (stats) l0_per_patch[i] = code.nnz();
  }

  Eigen::MatrixXd sum, count;
  accumulate_patches(coded, static_cast<int>(image.rows()),
                     static_cast<int>(image.cols()), sum, count);
  Eigen::MatrixXd out =
      (image.array() + opts.prior_weight * sum.array()) /
      (1.0 + opts.prior_weight * count.array());

  if (stats) {
    stats->code_l0 = 0.0;
    for (int i = 0; i < n_patches; ++i) stats->code_l0 += l0_per_patch[i];
    const PatchSet out_patches =
        extract_patches(out, s, opts.stride);
    stats->patch_residual_sq =
        (out_patches.patches - coded.patches).squaredNorm();
  }
  return out;
}

}  // namespace sct
