#include "sct/recon.hpp"

#include <fftw3.h>
#include <omp.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sct/parallel.hpp"

namespace sct {

namespace {

constexpr double kPi = std::numbers::pi;

inline double bilinear(const Eigen::MatrixXd& img, double row_f, double col_f) {
  const int rows = static_cast<int>(img.rows());
  const int cols = static_cast<int>(img.cols());
  if (row_f <= -1.0 || row_f >= rows || col_f <= -1.0 || col_f >= cols)
    return 0.0;
  const int r0 = static_cast<int>(std::floor(row_f));
  const int c0 = static_cast<int>(std::floor(col_f));
  const double fr = row_f - r0;
  const double fc = col_f - c0;
  auto at = [&](int r, int c) -> double {
    if (r < 0 || r >= rows || c < 0 || c >= cols) return 0.0;
    return img(r, c);
  };
  return (1.0 - fr) * ((1.0 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) +
         fr * ((1.0 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

}  // namespace

void Geometry::validate() const {
  if (n_angles < 1 || n_detectors < 1)
    throw std::invalid_argument("Geometry: need at least one angle and detector");
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("Geometry: empty image grid");
  if (!(det_spacing_cm > 0.0) || !(pixel_size_cm > 0.0))
    throw std::invalid_argument("Geometry: nonpositive spacing");
  const double fov = n_detectors * det_spacing_cm;
  const double diag =
      pixel_size_cm * std::hypot(static_cast<double>(rows), static_cast<double>(cols));
  if (fov < diag)
    throw std::invalid_argument("Geometry: detector field of view (" +
                                std::to_string(fov) +
                                " cm) does not cover the image diagonal (" +
                                std::to_string(diag) + " cm)");
}

Eigen::MatrixXd forward_project(const Eigen::MatrixXd& image,
                                const Geometry& geom) {
  geom.validate();
  if (image.rows() != geom.rows || image.cols() != geom.cols)
    throw std::invalid_argument("forward_project: image shape mismatch");

  const int V = geom.n_angles;
  const int C = geom.n_detectors;
  const double h = geom.pixel_size_cm;
  const double half_diag =
      0.5 * h * std::hypot(static_cast<double>(geom.rows),
                           static_cast<double>(geom.cols));
  const int n_steps = static_cast<int>(std::ceil(2.0 * half_diag / h)) + 2;
  const double s0 = -0.5 * n_steps * h;

  Eigen::MatrixXd sino(V, C);
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (int v = 0; v < V; ++v) {
    const double theta = v * kPi / V;
    const double nx = std::cos(theta), ny = std::sin(theta);
    const double dx = -ny, dy = nx;
    for (int c = 0; c < C; ++c) {
      const double t = (c - (C - 1) / 2.0) * geom.det_spacing_cm;
      double acc = 0.0;
      for (int k = 0; k < n_steps; ++k) {
        const double s = s0 + (k + 0.5) * h;
        const double x = t * nx + s * dx;
        const double y = t * ny + s * dy;
        const double col_f = x / h + (geom.cols - 1) / 2.0;
        const double row_f = (geom.rows - 1) / 2.0 - y / h;
        acc += bilinear(image, row_f, col_f);
      }
      sino(v, c) = acc * h;
    }
  }
  return sino;
}

Eigen::MatrixXd fbp(const Eigen::MatrixXd& sinogram, const Geometry& geom,
                    FbpFilter filter) {
  geom.validate();
  if (sinogram.rows() != geom.n_angles || sinogram.cols() != geom.n_detectors)
    throw std::invalid_argument("fbp: sinogram shape mismatch");

  const int V = geom.n_angles;
  const int C = geom.n_detectors;
  const double tau = geom.det_spacing_cm;
  const int n_pad = next_pow2(2 * C);
  const int n_freq = n_pad / 2 + 1;

  // |nu| ramp, optionally apodized by the Shepp-Logan sinc window.
  std::vector<double> ramp(n_freq);
  for (int k = 0; k < n_freq; ++k) {
    const double nu = k / (n_pad * tau);
    double w = nu;
    if (filter == FbpFilter::kSheppLogan && k > 0) {
      const double arg = kPi * k / n_pad;  // pi*nu/(2*nu_nyquist)
      w *= std::sin(arg) / arg;
    }
    ramp[k] = w;
  }

  Eigen::MatrixXd filtered(V, C);
  {
    double* buf = fftw_alloc_real(n_pad);
    fftw_complex* spec = fftw_alloc_complex(n_freq);
    fftw_plan fwd = fftw_plan_dft_r2c_1d(n_pad, buf, spec, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_c2r_1d(n_pad, spec, buf, FFTW_ESTIMATE);
    for (int v = 0; v < V; ++v) {
      for (int i = 0; i < n_pad; ++i) buf[i] = (i < C) ? sinogram(v, i) : 0.0;
      fftw_execute(fwd);
      for (int k = 0; k < n_freq; ++k) {
        spec[k][0] *= ramp[k];
        spec[k][1] *= ramp[k];
      }
      fftw_execute(bwd);
      for (int i = 0; i < C; ++i) filtered(v, i) = buf[i] / n_pad;
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
    fftw_free(spec);
  }

  Eigen::MatrixXd image(geom.rows, geom.cols);
  const double d_theta = kPi / V;
  std::vector<double> cos_t(V), sin_t(V);
  for (int v = 0; v < V; ++v) {
    cos_t[v] = std::cos(v * d_theta);
    sin_t[v] = std::sin(v * d_theta);
  }
#pragma omp parallel for schedule(static) num_threads(max_threads())
  for (int r = 0; r < geom.rows; ++r) {
    for (int c = 0; c < geom.cols; ++c) {
      const double x = (c - (geom.cols - 1) / 2.0) * geom.pixel_size_cm;
      const double y = ((geom.rows - 1) / 2.0 - r) * geom.pixel_size_cm;
      double acc = 0.0;
      for (int v = 0; v < V; ++v) {
        const double t = x * cos_t[v] + y * sin_t[v];
        const double det_f = t / tau + (C - 1) / 2.0;
        if (det_f <= -1.0 || det_f >= C) continue;
        const int d0 = static_cast<int>(std::floor(det_f));
        const double fd = det_f - d0;
        const double q0 = (d0 >= 0) ? filtered(v, d0) : 0.0;
        const double q1 = (d0 + 1 < C) ? filtered(v, d0 + 1) : 0.0;
        acc += (1.0 - fd) * q0 + fd * q1;
      }
      image(r, c) = acc * d_theta;
    }
  }
  return image;
}

}  // namespace sct
