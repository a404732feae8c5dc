#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sct/metrics.hpp"

using namespace sct;

namespace {

// Dense reference SSIM, written independently of the library version: every
// window recomputed from scratch with explicit double loops.
double reference_ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                      int w, double k1, double k2, double peak) {
  const double c1 = (k1 * peak) * (k1 * peak);
  const double c2 = (k2 * peak) * (k2 * peak);
  double total = 0.0;
  int count = 0;
  for (int r = 0; r + w <= a.rows(); ++r)
    for (int c = 0; c + w <= a.cols(); ++c) {
      double ma = 0, mb = 0;
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
          ma += a(r + i, c + j);
          mb += b(r + i, c + j);
        }
      ma /= w * w;
      mb /= w * w;
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
          va += (a(r + i, c + j) - ma) * (a(r + i, c + j) - ma);
          vb += (b(r + i, c + j) - mb) * (b(r + i, c + j) - mb);
          cov += (a(r + i, c + j) - ma) * (b(r + i, c + j) - mb);
        }
      va /= w * w;
      vb /= w * w;
      cov /= w * w;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / count;
}

Eigen::MatrixXd random_image(int r, int c, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace

TEST_CASE("rmse of identical images is zero") {
  const Eigen::MatrixXd a = random_image(5, 7, 1);
  CHECK(rmse(a, a) == 0.0);
}

TEST_CASE("rmse hand computation") {
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << 0.0, 1.0;
  b << 1.0, 1.0;
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("rmse is absolutely homogeneous") {
  const Eigen::MatrixXd a = random_image(6, 6, 2);
  const Eigen::MatrixXd b = random_image(6, 6, 3);
  const double base = rmse(a, b);
  for (double c : {2.0, -3.5, 0.25})
    CHECK(rmse(c * a, c * b) == doctest::Approx(std::abs(c) * base).epsilon(1e-12));
}

TEST_CASE("rmse shape mismatch throws") {
  CHECK_THROWS_AS(rmse(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 2)),
                  std::invalid_argument);
}

TEST_CASE("psnr at rmse == peak is 0 dB") {
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.0;
  b << 0.7;
  CHECK(psnr(a, b, 0.7) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("psnr of identical images reports the 300 dB sentinel") {
  const Eigen::MatrixXd a = random_image(4, 4, 4);
  CHECK(psnr(a, a) == 300.0);
}

TEST_CASE("halving the error adds 20 log10(2) dB") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd b1 = Eigen::MatrixXd::Constant(2, 2, 0.2);
  Eigen::MatrixXd b2 = Eigen::MatrixXd::Constant(2, 2, 0.1);
  CHECK(psnr(a, b2) - psnr(a, b1) ==
        doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("psnr decreases along a ladder of growing perturbations") {
  const Eigen::MatrixXd a = random_image(8, 8, 5);
  double prev = 1e9;
  for (double s : {0.001, 0.003, 0.01, 0.03, 0.1}) {
    const Eigen::MatrixXd b = a.array() + s;
    const double v = psnr(a, b);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim of identical images is exactly 1") {
  const Eigen::MatrixXd a = random_image(12, 12, 6);
  CHECK(ssim(a, a) == 1.0);
}

TEST_CASE("ssim matches the dense reference loop") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd a = random_image(16, 16, 100 + seed);
    const Eigen::MatrixXd b = random_image(16, 16, 200 + seed);
    const double want = reference_ssim(a, b, 8, 0.01, 0.03, 1.0);
    CHECK(ssim(a, b) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("ssim against a constant image stays below 1 and matches reference") {
  const Eigen::MatrixXd a = random_image(16, 16, 7);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Constant(16, 16, 0.5);
  const double got = ssim(a, b);
  CHECK(got < 1.0);
  CHECK(got == doctest::Approx(reference_ssim(a, b, 8, 0.01, 0.03, 1.0))
                   .epsilon(1e-10));
}

TEST_CASE("ssim is symmetric") {
  const Eigen::MatrixXd a = random_image(10, 14, 8);
  const Eigen::MatrixXd b = random_image(10, 14, 9);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("ssim under a common constant shift matches the reference") {
  const Eigen::MatrixXd a = random_image(16, 16, 10);
  const Eigen::MatrixXd b = random_image(16, 16, 11);
  const Eigen::MatrixXd ac = a.array() + 0.3;
  const Eigen::MatrixXd bc = b.array() + 0.3;
  CHECK(ssim(ac, bc) == doctest::Approx(reference_ssim(ac, bc, 8, 0.01, 0.03, 1.0))
                            .epsilon(1e-10));
}

TEST_CASE("ssim window larger than the image throws") {
  CHECK_THROWS_AS(ssim(Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Zero(4, 4)),
                  std::invalid_argument);
}

TEST_CASE("roi_mean basics") {
  Tensor3 f(4, 4, 2, 0.5);
  std::vector<int> all;
  for (int p = 0; p < 16; ++p) all.push_back(p);
  CHECK(roi_mean(f, all, 0) == 0.5);

  f(1, 2, 1) = 0.9;
  CHECK(roi_mean(f, {1 * 4 + 2}, 1) == 0.9);

  CHECK_THROWS_AS(roi_mean(f, {}, 0), std::invalid_argument);
  CHECK_THROWS_AS(roi_mean(f, {99}, 0), std::invalid_argument);
}
