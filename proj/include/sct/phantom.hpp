#ifndef SCT_PHANTOM_HPP
#define SCT_PHANTOM_HPP

#include <Eigen/Core>
#include <vector>

#include "sct/tensor.hpp"

namespace sct {

/// A filled disk assigning `fraction` of material `material` to every pixel
/// whose center lies inside the circle.
struct DiskSpec {
  double center_row = 0.0;  // pixels
  double center_col = 0.0;  // pixels
  double radius = 0.0;      // pixels
  int material = 0;
  double fraction = 0.0;    // in [0, 1]
};

struct PhantomSpec {
  int rows = 0;
  int cols = 0;
  double pixel_size_cm = 0.1;
  int n_materials = 0;
  std::vector<DiskSpec> disks;
};

struct Phantom {
  Tensor3 materials;     // rows x cols x M ground-truth fractions
  Eigen::MatrixXd air;   // 1 - sum of fractions, in [0, 1]
};

/// Rasterizes the disk list into ground-truth fraction maps. Disks are
/// applied in order; a later disk overwrites earlier assignments of the same
/// material at the pixels it covers (different materials compose, so a
/// mixture is written as stacked disks of distinct materials). The air map is
/// 1 - sum of fractions at every pixel.
///
/// Throws std::invalid_argument when a fraction lies outside [0, 1], a disk
/// references a material out of range, a disk leaves the grid, or the
/// composed per-pixel fractions sum above 1.
Phantom make_phantom(const PhantomSpec& spec);

}  // namespace sct

#endif
