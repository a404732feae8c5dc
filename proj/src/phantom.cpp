#include "sct/phantom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sct {

Phantom make_phantom(const PhantomSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1)
    throw std::invalid_argument("make_phantom: empty grid");
  if (spec.n_materials < 0)
    throw std::invalid_argument("make_phantom: negative material count");

  for (std::size_t i = 0; i < spec.disks.size(); ++i) {
    const auto& d = spec.disks[i];
    if (d.fraction < 0.0 || d.fraction > 1.0)
      throw std::invalid_argument("make_phantom: disk " + std::to_string(i) +
                                  " fraction outside [0, 1]");
    if (d.material < 0 || d.material >= spec.n_materials)
      throw std::invalid_argument("make_phantom: disk " + std::to_string(i) +
                                  " material index out of range");
    if (d.radius < 0.0)
      throw std::invalid_argument("make_phantom: disk " + std::to_string(i) +
                                  " negative radius");
    if (d.center_row - d.radius < -0.5 || d.center_col - d.radius < -0.5 ||
        d.center_row + d.radius > spec.rows - 0.5 ||
        d.center_col + d.radius > spec.cols - 0.5)
      throw std::invalid_argument("make_phantom: disk " + std::to_string(i) +
                                  " leaves the grid");
  }

  Phantom ph;
  ph.materials = Tensor3(spec.rows, spec.cols, spec.n_materials);
  for (const auto& d : spec.disks) {
    const double r2 = d.radius * d.radius;
    const int r_lo = std::max(0, static_cast<int>(std::floor(d.center_row - d.radius)));
    const int r_hi = std::min(spec.rows - 1, static_cast<int>(std::ceil(d.center_row + d.radius)));
    const int c_lo = std::max(0, static_cast<int>(std::floor(d.center_col - d.radius)));
    const int c_hi = std::min(spec.cols - 1, static_cast<int>(std::ceil(d.center_col + d.radius)));
    for (int r = r_lo; r <= r_hi; ++r)
      for (int c = c_lo; c <= c_hi; ++c) {
        const double dr = r - d.center_row;
        const double dc = c - d.center_col;
        if (dr * dr + dc * dc <= r2) ph.materials(r, c, d.material) = d.fraction;
      }
  }

  ph.air.resize(spec.rows, spec.cols);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) {
      double total = 0.0;
      for (int m = 0; m < spec.n_materials; ++m) total += ph.materials(r, c, m);
      if (total > 1.0 + 1e-12)
        throw std::invalid_argument(
            "make_phantom: per-pixel fractions sum above 1 at (" +
            std::to_string(r) + ", " + std::to_string(c) + ")");
      ph.air(r, c) = 1.0 - total;
    }
  return ph;
}

}  // namespace sct
