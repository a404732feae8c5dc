#include "sct/simulate.hpp"

#include <omp.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sct/parallel.hpp"

namespace sct {

namespace {

// splitmix64: mixes (seed, bin, ray) into an independent stream seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Tensor3 attenuation_images(const Tensor3& fractions,
                           const Eigen::MatrixXd& basis) {
  if (basis.cols() != fractions.channels())
    throw std::invalid_argument(
        "attenuation_images: basis columns != material channels");
  const int n_bins = static_cast<int>(basis.rows());
  Tensor3 x(fractions.rows(), fractions.cols(), n_bins);
  for (int r = 0; r < fractions.rows(); ++r)
    for (int c = 0; c < fractions.cols(); ++c)
      for (int n = 0; n < n_bins; ++n) {
        double acc = 0.0;
        for (int m = 0; m < fractions.channels(); ++m)
          acc += basis(n, m) * fractions(r, c, m);
        x(r, c, n) = acc;
      }
  return x;
}

CountData synthesize_counts(const Tensor3& fractions,
                            const Eigen::MatrixXd& basis, const Geometry& geom,
                            const SpectrumBins& bins, bool noise,
                            std::uint64_t seed) {
  bins.validate();
  if (basis.rows() != bins.count())
    throw std::invalid_argument("synthesize_counts: basis rows != bin count");
  if (geom.rows != fractions.rows() || geom.cols != fractions.cols())
    throw std::invalid_argument(
        "synthesize_counts: geometry grid does not match phantom");

  const Tensor3 x = attenuation_images(fractions, basis);
  CountData out;
  out.geometry = geom;
  out.noisy = noise;
  out.seed = seed;
  out.counts.reserve(bins.count());

  for (int n = 0; n < bins.count(); ++n) {
    const Eigen::MatrixXd sino = forward_project(x.channel(n), geom);
    Eigen::MatrixXd y(geom.n_angles, geom.n_detectors);
    const double i0 = bins.bins[n].i0;
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (int v = 0; v < geom.n_angles; ++v) {
      for (int c = 0; c < geom.n_detectors; ++c) {
        const double mean = i0 * std::exp(-sino(v, c));
        if (!noise) {
          y(v, c) = mean;
        } else {
          const std::uint64_t stream =
              mix64(seed ^ mix64(static_cast<std::uint64_t>(n) << 40 ^
                                 static_cast<std::uint64_t>(v) << 20 ^
                                 static_cast<std::uint64_t>(c)));
          std::mt19937_64 rng(stream);
          std::poisson_distribution<long> pois(mean);
          y(v, c) = static_cast<double>(pois(rng));
        }
      }
    }
    out.counts.push_back(std::move(y));
  }
  return out;
}

std::vector<Eigen::MatrixXd> log_normalize(const CountData& counts,
                                           const SpectrumBins& bins,
                                           double count_floor) {
  if (static_cast<int>(counts.counts.size()) != bins.count())
    throw std::invalid_argument("log_normalize: bin count mismatch");
  std::vector<Eigen::MatrixXd> sinos;
  sinos.reserve(counts.counts.size());
  for (int n = 0; n < bins.count(); ++n) {
    const double i0 = bins.bins[n].i0;
    sinos.push_back(
        (-((counts.counts[n].array().max(count_floor)) / i0).log()).matrix());
  }
  return sinos;
}

}  // namespace sct
