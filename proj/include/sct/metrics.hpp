#ifndef SCT_METRICS_HPP
#define SCT_METRICS_HPP

#include <Eigen/Core>
#include <vector>

#include "sct/tensor.hpp"

namespace sct {

/// sqrt(mean((a - b)^2)). Throws std::invalid_argument on shape mismatch.
double rmse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// 20 log10(peak / rmse) dB, capped at the 300 dB sentinel (identical inputs
/// report exactly 300).
double psnr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
            double peak = 1.0);

struct SsimOptions {
  int window = 8;   // uniform square window, stride 1
  double k1 = 0.01;
  double k2 = 0.03;
  double peak = 1.0;
};

/// Mean structural similarity over all sliding windows, using population
/// moments and C1 = (k1*peak)^2, C2 = (k2*peak)^2. Throws
/// std::invalid_argument when the images are smaller than the window.
double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
            const SsimOptions& opts = {});

/// Mean of one material channel over a pixel set (row-major linear indices).
/// Throws std::invalid_argument on an empty ROI or out-of-range index.
double roi_mean(const Tensor3& f, const std::vector<int>& roi_pixels,
                int material);

/// Gathers an ROI of one channel into a dense matrix (rows = ROI bounding
/// rows); helper for computing windowed metrics over rectangular ROIs.
Eigen::MatrixXd roi_patch(const Eigen::MatrixXd& image, int r0, int c0,
                          int height, int width);

}  // namespace sct

#endif
