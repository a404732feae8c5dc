#ifndef SCT_RECON_HPP
#define SCT_RECON_HPP

#include <Eigen/Core>

namespace sct {

/// Parallel-beam acquisition geometry. Angles are the V values v*pi/V for
/// v = 0..V-1; detector channel c sits at signed offset
/// (c - (C-1)/2) * det_spacing_cm from the rotation center, which coincides
/// with the image center. Pixel (r, c) of the image has world coordinates
/// x = (c - (cols-1)/2) * pixel_size_cm, y = ((rows-1)/2 - r) * pixel_size_cm.
struct Geometry {
  int n_angles = 0;          // V
  int n_detectors = 0;       // C
  double det_spacing_cm = 0.1;
  int rows = 0;              // J1
  int cols = 0;              // J2
  double pixel_size_cm = 0.1;

  /// Enforces V >= 1, C >= 1 and a detector field of view covering the image
  /// diagonal. Throws std::invalid_argument.
  void validate() const;
};

enum class FbpFilter { kRamp, kSheppLogan };

/// Ray-driven line integrals (V x C sinogram, units of image * cm). Each ray
/// is sampled at pixel-size steps with bilinear interpolation, so the map is
/// linear in the image. Throws std::invalid_argument on a shape mismatch.
Eigen::MatrixXd forward_project(const Eigen::MatrixXd& image,
                                const Geometry& geom);

/// Filtered backprojection: frequency-domain ramp filtering (zero-padded to
/// the next power of two >= 2C, optional Shepp-Logan apodization) followed by
/// bilinearly interpolated backprojection. Output in the image units (cm^-1
/// for log sinograms of attenuation).
Eigen::MatrixXd fbp(const Eigen::MatrixXd& sinogram, const Geometry& geom,
                    FbpFilter filter = FbpFilter::kRamp);

}  // namespace sct

#endif
