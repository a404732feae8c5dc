#ifndef SCT_PATCHES_HPP
#define SCT_PATCHES_HPP

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace sct {

/// A set of square patches lifted from one image plane.
///
/// Column i of `patches` is patch i flattened with the row offset fastest:
/// vector index dr + dc * patch_size for pixel (anchor.row + dr,
/// anchor.col + dc).
struct PatchSet {
  Eigen::MatrixXd patches;  // (patch_size^2) x P
  std::vector<std::pair<int, int>> anchors;  // (row, col) of top-left corner
  int patch_size = 0;
};

/// Anchor coordinates along one axis: the stride grid 0, stride, 2*stride...
/// with a final anchor clamped to extent - patch_size so the border is always
/// covered.
std::vector<int> patch_anchor_grid(int extent, int patch_size, int stride);

/// Extracts every patch whose anchor lies on the clamped stride grid.
/// Throws std::invalid_argument when the patch does not fit in the image or
/// stride < 1.
PatchSet extract_patches(const Eigen::MatrixXd& image, int patch_size,
                         int stride);

/// Adjoint of extraction: per-pixel sum of patch contributions and per-pixel
/// coverage count. Throws std::invalid_argument on anchors outside the shape.
void accumulate_patches(const PatchSet& ps, int rows, int cols,
                        Eigen::MatrixXd& sum, Eigen::MatrixXd& count);

/// Count-normalized aggregation: each pixel is the average of all patch
/// values covering it. Round trip aggregate(extract(img)) == img when the
/// patches are unmodified. Throws std::runtime_error if a pixel is covered by
/// no patch (extraction never produces such a set).
Eigen::MatrixXd aggregate_patches(const PatchSet& ps, int rows, int cols);

}  // namespace sct

#endif
