#include "sct/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace sct {

double rmse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("rmse: shape mismatch");
  if (a.size() == 0) throw std::invalid_argument("rmse: empty input");
  return std::sqrt((a - b).squaredNorm() / a.size());
}

double psnr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double peak) {
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  const double e = rmse(a, b);
  if (e == 0.0) return 300.0;
  return std::min(300.0, 20.0 * std::log10(peak / e));
}

double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
            const SsimOptions& opts) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("ssim: shape mismatch");
  const int w = opts.window;
  if (w < 1 || a.rows() < w || a.cols() < w)
    throw std::invalid_argument("ssim: image smaller than window");

  const double c1 = (opts.k1 * opts.peak) * (opts.k1 * opts.peak);
  const double c2 = (opts.k2 * opts.peak) * (opts.k2 * opts.peak);
  const double inv_n = 1.0 / (w * w);

  double total = 0.0;
  long n_windows = 0;
  for (int r = 0; r + w <= a.rows(); ++r) {
    for (int c = 0; c + w <= a.cols(); ++c) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dr = 0; dr < w; ++dr)
        for (int dc = 0; dc < w; ++dc) {
          const double va = a(r + dr, c + dc);
          const double vb = b(r + dr, c + dc);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double mu_a = sa * inv_n, mu_b = sb * inv_n;
      const double var_a = saa * inv_n - mu_a * mu_a;
      const double var_b = sbb * inv_n - mu_b * mu_b;
      const double cov = sab * inv_n - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++n_windows;
    }
  }
  return total / n_windows;
}

double roi_mean(const Tensor3& f, const std::vector<int>& roi_pixels,
                int material) {
  if (roi_pixels.empty()) throw std::invalid_argument("roi_mean: empty ROI");
  if (material < 0 || material >= f.channels())
    throw std::invalid_argument("roi_mean: material out of range");
  const long n_px = static_cast<long>(f.rows()) * f.cols();
  double acc = 0.0;
  for (int p : roi_pixels) {
    if (p < 0 || p >= n_px)
      throw std::invalid_argument("roi_mean: pixel index out of range");
    acc += f.data()[static_cast<std::size_t>(p) * f.channels() + material];
  }
  return acc / roi_pixels.size();
}

Eigen::MatrixXd roi_patch(const Eigen::MatrixXd& image, int r0, int c0,
                          int height, int width) {
  if (r0 < 0 || c0 < 0 || height < 1 || width < 1 ||
      r0 + height > image.rows() || c0 + width > image.cols())
    throw std::invalid_argument("roi_patch: rectangle outside image");
  return image.block(r0, c0, height, width);
}

}  // namespace sct
