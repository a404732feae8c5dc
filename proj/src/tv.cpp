#include "sct/tv.hpp"

#include <algorithm>
#include <stdexcept>

namespace sct {

Eigen::MatrixXd tv_prox(const Eigen::MatrixXd& f, double weight, int iters) {
  if (iters < 0) throw std::invalid_argument("tv_prox: negative iterations");
  if (weight <= 0.0 || iters == 0) return f;

  const Eigen::Index rows = f.rows(), cols = f.cols();
  Eigen::MatrixXd px = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::MatrixXd py = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::MatrixXd div(rows, cols), u(rows, cols);
  const double step = 0.125;  // 1/8 <= 1/||div grad||

  for (int it = 0; it < iters; ++it) {
    // div p with backward differences (adjoint of forward-difference grad)
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        double d = 0.0;
        d += (c == 0) ? px(r, 0) : (c == cols - 1 ? -px(r, c - 1) : px(r, c) - px(r, c - 1));
        d += (r == 0) ? py(0, c) : (r == rows - 1 ? -py(r - 1, c) : py(r, c) - py(r - 1, c));
        div(r, c) = d;
      }
    u = div * weight + f;
    // gradient step on the dual + componentwise projection onto [-1, 1]
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double gx = (c + 1 < cols) ? u(r, c + 1) - u(r, c) : 0.0;
        const double gy = (r + 1 < rows) ? u(r + 1, c) - u(r, c) : 0.0;
        px(r, c) = std::clamp(px(r, c) + step * gx / weight, -1.0, 1.0);
        py(r, c) = std::clamp(py(r, c) + step * gy / weight, -1.0, 1.0);
      }
  }

  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double d = 0.0;
      d += (c == 0) ? px(r, 0) : (c == cols - 1 ? -px(r, c - 1) : px(r, c) - px(r, c - 1));
      d += (r == 0) ? py(0, c) : (r == rows - 1 ? -py(r - 1, c) : py(r, c) - py(r - 1, c));
      div(r, c) = d;
    }
  return f + weight * div;
}

}  // namespace sct
