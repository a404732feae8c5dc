#ifndef SCT_KSVD_HPP
#define SCT_KSVD_HPP

#include <Eigen/Core>
#include <vector>

#include "sct/dictionary.hpp"
#include "sct/patches.hpp"
#include "sct/tensor.hpp"

namespace sct {

/// Builds the dictionary training set: normalizes the material tensor per
/// channel, forms its mode-1 unfolding (channel planes side by side) and
/// samples cfg.n_patches anchors uniformly at random from the anchors that
/// keep a patch inside a single channel's sub-image. Sampling is without
/// replacement when enough anchors exist; otherwise with replacement, with
/// `with_replacement` set so callers can warn.
struct TrainingSet {
  PatchSet patches;
  bool with_replacement = false;
};
TrainingSet build_training_set(const Tensor3& materials,
                               const TrainConfig& cfg);

/// K-SVD dictionary training.
///
/// Atoms initialize from distinct training patches (seeded shuffle,
/// normalized). Each iteration runs OMP coding with budget
/// cfg.train_sparsity and eps 0 -- a patch keeps its previous code when that
/// represents it better than the fresh OMP result -- then updates every atom
/// by a rank-1 SVD of the residual restricted to the patches using it (power
/// iteration started from the current atom, so the fit never degrades). Dead
/// atoms are replaced by the currently worst-represented patch. The
/// objective log (sum of squared patch residuals after each full iteration)
/// is therefore non-increasing by construction.
struct KsvdResult {
  Dictionary dictionary;
  Eigen::VectorXd objective;  // one entry per iteration
};
KsvdResult ksvd_train(const PatchSet& training, const TrainConfig& cfg);

/// Warm-started variant: `init_atoms` (S x n_atoms) replaces the data-patch
/// initialization; columns are normalized before use.
KsvdResult ksvd_train(const PatchSet& training, const TrainConfig& cfg,
                      const Eigen::MatrixXd& init_atoms);

}  // namespace sct

#endif
