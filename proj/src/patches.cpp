#include "sct/patches.hpp"

#include <stdexcept>
#include <string>

namespace sct {

std::vector<int> patch_anchor_grid(int extent, int patch_size, int stride) {
  if (patch_size < 1 || patch_size > extent)
    throw std::invalid_argument("patch_anchor_grid: patch size " +
                                std::to_string(patch_size) +
                                " does not fit extent " +
                                std::to_string(extent));
  if (stride < 1) throw std::invalid_argument("patch_anchor_grid: stride < 1");
  std::vector<int> anchors;
  const int last = extent - patch_size;
  for (int a = 0; a <= last; a += stride) anchors.push_back(a);
  if (anchors.back() != last) anchors.push_back(last);
  return anchors;
}

PatchSet extract_patches(const Eigen::MatrixXd& image, int patch_size,
                         int stride) {
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  const auto row_anchors = patch_anchor_grid(rows, patch_size, stride);
  const auto col_anchors = patch_anchor_grid(cols, patch_size, stride);

  PatchSet ps;
  ps.patch_size = patch_size;
  const int s = patch_size;
  ps.patches.resize(s * s, static_cast<Eigen::Index>(row_anchors.size()) *
                               col_anchors.size());
  ps.anchors.reserve(row_anchors.size() * col_anchors.size());
  Eigen::Index i = 0;
  for (int ar : row_anchors)
    for (int ac : col_anchors) {
      for (int dc = 0; dc < s; ++dc)
        for (int dr = 0; dr < s; ++dr)
          ps.patches(dr + dc * s, i) = image(ar + dr, ac + dc);
      ps.anchors.emplace_back(ar, ac);
      ++i;
    }
  return ps;
}

void accumulate_patches(const PatchSet& ps, int rows, int cols,
                        Eigen::MatrixXd& sum, Eigen::MatrixXd& count) {
  const int s = ps.patch_size;
  if (ps.patches.rows() != static_cast<Eigen::Index>(s) * s)
    throw std::invalid_argument("accumulate_patches: patch matrix rows != s^2");
  if (ps.patches.cols() != static_cast<Eigen::Index>(ps.anchors.size()))
    throw std::invalid_argument(
        "accumulate_patches: anchor count != patch count");
  sum.setZero(rows, cols);
  count.setZero(rows, cols);
  for (std::size_t i = 0; i < ps.anchors.size(); ++i) {
    const auto [ar, ac] = ps.anchors[i];
    if (ar < 0 || ac < 0 || ar + s > rows || ac + s > cols)
      throw std::invalid_argument("accumulate_patches: anchor outside shape");
    for (int dc = 0; dc < s; ++dc)
      for (int dr = 0; dr < s; ++dr) {
        sum(ar + dr, ac + dc) += ps.patches(dr + dc * s, i);
        count(ar + dr, ac + dc) += 1.0;
      }
  }
}

Eigen::MatrixXd aggregate_patches(const PatchSet& ps, int rows, int cols) {
  Eigen::MatrixXd sum, count;
  accumulate_patches(ps, rows, cols, sum, count);
  if ((count.array() == 0.0).any())
    throw std::runtime_error(
        "aggregate_patches: pixel covered by zero patches");
  return sum.array() / count.array();
}

}  // namespace sct
