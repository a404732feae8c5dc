#ifndef SCT_SIMULATE_HPP
#define SCT_SIMULATE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "sct/attenuation.hpp"
#include "sct/recon.hpp"
#include "sct/tensor.hpp"

namespace sct {

/// Detected photon counts, one V x C plane per energy bin.
struct CountData {
  std::vector<Eigen::MatrixXd> counts;  // N planes, V x C
  Geometry geometry;
  bool noisy = false;
  std::uint64_t seed = 0;
};

/// Per-bin attenuation images x_n = sum_m basis(n, m) * f_m (cm^-1), the
/// monochromatic-per-bin discretization the decomposition model assumes.
Tensor3 attenuation_images(const Tensor3& fractions,
                           const Eigen::MatrixXd& basis);

/// Forward-projects the per-bin attenuation of `fractions` and converts line
/// integrals to expected counts i0 * exp(-integral). With noise enabled each
/// (bin, ray) draws one Poisson sample from an independent stream derived
/// from (seed, bin, angle, detector), so results do not depend on scheduling.
CountData synthesize_counts(const Tensor3& fractions,
                            const Eigen::MatrixXd& basis, const Geometry& geom,
                            const SpectrumBins& bins, bool noise,
                            std::uint64_t seed);

/// Log transform p = -ln(max(y, count_floor) / i0) per bin; the floor keeps
/// zero-count rays finite.
std::vector<Eigen::MatrixXd> log_normalize(const CountData& counts,
                                           const SpectrumBins& bins,
                                           double count_floor = 0.5);

}  // namespace sct

#endif
