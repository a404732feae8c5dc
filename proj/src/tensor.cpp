#include "sct/tensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sct {

Tensor3::Tensor3(int rows, int cols, int channels, double fill)
    : rows_(rows), cols_(cols), channels_(channels) {
  if (rows < 0 || cols < 0 || channels < 0)
    throw std::invalid_argument("Tensor3: negative dimension");
  data_.assign(static_cast<std::size_t>(rows) * cols * channels, fill);
}

Tensor3 Tensor3::from_data(int rows, int cols, int channels,
                           std::vector<double> data) {
  Tensor3 t(rows, cols, channels);
  if (data.size() != t.data_.size())
    throw std::invalid_argument("Tensor3::from_data: data length " +
                                std::to_string(data.size()) +
                                " does not match shape");
  t.data_ = std::move(data);
  return t;
}

Eigen::MatrixXd Tensor3::channel(int ch) const {
  if (ch < 0 || ch >= channels_)
    throw std::invalid_argument("Tensor3::channel: index out of range");
  Eigen::MatrixXd plane(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) plane(r, c) = (*this)(r, c, ch);
  return plane;
}

void Tensor3::set_channel(int ch, const Eigen::MatrixXd& plane) {
  if (ch < 0 || ch >= channels_)
    throw std::invalid_argument("Tensor3::set_channel: index out of range");
  if (plane.rows() != rows_ || plane.cols() != cols_)
    throw std::invalid_argument("Tensor3::set_channel: plane shape mismatch");
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) (*this)(r, c, ch) = plane(r, c);
}

bool Tensor3::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Eigen::MatrixXd mode_unfold(const Tensor3& t, int mode) {
  const int R = t.rows(), C = t.cols(), K = t.channels();
  Eigen::MatrixXd m;
  switch (mode) {
    case 1:
      m.resize(R, static_cast<Eigen::Index>(C) * K);
      for (int ch = 0; ch < K; ++ch)
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < R; ++r)
            m(r, c + static_cast<Eigen::Index>(ch) * C) = t(r, c, ch);
      break;
    case 2:
      m.resize(C, static_cast<Eigen::Index>(R) * K);
      for (int ch = 0; ch < K; ++ch)
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < R; ++r)
            m(c, r + static_cast<Eigen::Index>(ch) * R) = t(r, c, ch);
      break;
    case 3:
      m.resize(K, static_cast<Eigen::Index>(R) * C);
      for (int ch = 0; ch < K; ++ch)
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < R; ++r)
            m(ch, r + static_cast<Eigen::Index>(c) * R) = t(r, c, ch);
      break;
    default:
      throw std::invalid_argument("mode_unfold: mode must be 1, 2 or 3");
  }
  return m;
}

Tensor3 mode_fold(const Eigen::MatrixXd& m, int mode, int rows, int cols,
                  int channels) {
  const Eigen::Index R = rows, C = cols, K = channels;
  Eigen::Index want_rows = 0, want_cols = 0;
  switch (mode) {
    case 1: want_rows = R; want_cols = C * K; break;
    case 2: want_rows = C; want_cols = R * K; break;
    case 3: want_rows = K; want_cols = R * C; break;
    default:
      throw std::invalid_argument("mode_fold: mode must be 1, 2 or 3");
  }
  if (m.rows() != want_rows || m.cols() != want_cols)
    throw std::invalid_argument(
        "mode_fold: matrix shape inconsistent with target tensor shape");

  Tensor3 t(rows, cols, channels);
  for (int ch = 0; ch < channels; ++ch)
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) {
        switch (mode) {
          case 1: t(r, c, ch) = m(r, c + static_cast<Eigen::Index>(ch) * C); break;
          case 2: t(r, c, ch) = m(c, r + static_cast<Eigen::Index>(ch) * R); break;
          case 3: t(r, c, ch) = m(ch, r + static_cast<Eigen::Index>(c) * R); break;
        }
      }
  return t;
}

std::pair<Tensor3, NormalizationRecord> normalize_materials(const Tensor3& f) {
  if (!f.all_finite())
    throw std::invalid_argument("normalize_materials: non-finite input");
  const int K = f.channels();
  NormalizationRecord rec;
  rec.offset.resize(K);
  rec.scale.resize(K);
  Tensor3 g(f.rows(), f.cols(), K);
  for (int ch = 0; ch < K; ++ch) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < f.rows(); ++r)
      for (int c = 0; c < f.cols(); ++c) {
        lo = std::min(lo, f(r, c, ch));
        hi = std::max(hi, f(r, c, ch));
      }
    if (f.rows() == 0 || f.cols() == 0) { lo = 0.0; hi = 0.0; }
    const double scale = (hi > lo) ? (hi - lo) : 1.0;
    rec.offset[ch] = lo;
    rec.scale[ch] = scale;
    for (int r = 0; r < f.rows(); ++r)
      for (int c = 0; c < f.cols(); ++c)
        g(r, c, ch) = (f(r, c, ch) - lo) / scale;
  }
  return {std::move(g), std::move(rec)};
}

Tensor3 denormalize_materials(const Tensor3& g, const NormalizationRecord& rec) {
  if (static_cast<int>(rec.offset.size()) != g.channels() ||
      static_cast<int>(rec.scale.size()) != g.channels())
    throw std::invalid_argument(
        "denormalize_materials: record does not match channel count");
  Tensor3 f(g.rows(), g.cols(), g.channels());
  for (int ch = 0; ch < g.channels(); ++ch)
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c)
        f(r, c, ch) = g(r, c, ch) * rec.scale[ch] + rec.offset[ch];
  return f;
}

}  // namespace sct
