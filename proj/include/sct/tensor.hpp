#ifndef SCT_TENSOR_HPP
#define SCT_TENSOR_HPP

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace sct {

/// Dense 3-way tensor of doubles, shape (rows, cols, channels).
///
/// Memory layout is row-major with the channel index fastest:
/// data[(r * cols + c) * channels + ch]. This matches the on-disk tensor
/// format byte for byte.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int rows, int cols, int channels, double fill = 0.0);
  static Tensor3 from_data(int rows, int cols, int channels,
                           std::vector<double> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  double operator()(int r, int c, int ch) const {
    return data_[index(r, c, ch)];
  }
  double& operator()(int r, int c, int ch) { return data_[index(r, c, ch)]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Eigen::MatrixXd channel(int ch) const;
  void set_channel(int ch, const Eigen::MatrixXd& plane);

  bool all_finite() const;
  bool same_shape(const Tensor3& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ &&
           channels_ == other.channels_;
  }

 private:
  std::size_t index(int r, int c, int ch) const {
    return (static_cast<std::size_t>(r) * cols_ + c) * channels_ + ch;
  }

  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Mode-n unfolding. The column index runs lexicographically with the first
/// retained dimension fastest (retained dimensions keep their original
/// order), so with shape (R, C, K):
///
///   mode 1:  R x (C*K),  M(r, c + ch*C)  = T(r, c, ch)
///   mode 2:  C x (R*K),  M(c, r + ch*R)  = T(r, c, ch)
///   mode 3:  K x (R*C),  M(ch, r + c*R)  = T(r, c, ch)
///
/// In particular the mode-1 unfolding is the horizontal concatenation of the
/// channel planes [P_0 P_1 ... P_{K-1}].
Eigen::MatrixXd mode_unfold(const Tensor3& t, int mode);

/// Inverse of mode_unfold; exact round trip for every mode.
Tensor3 mode_fold(const Eigen::MatrixXd& m, int mode, int rows, int cols,
                  int channels);

/// Per-channel affine map recorded by normalize_materials.
/// normalized = (value - offset[ch]) / scale[ch]; scale is always > 0.
struct NormalizationRecord {
  std::vector<double> offset;
  std::vector<double> scale;
};

/// Min-max normalization per channel onto [0, 1]. A constant channel maps to
/// all zeros with offset = the constant and scale = 1, so the inverse map is
/// still exact. Throws std::invalid_argument on non-finite input.
std::pair<Tensor3, NormalizationRecord> normalize_materials(const Tensor3& f);

/// Inverse of normalize_materials.
Tensor3 denormalize_materials(const Tensor3& g, const NormalizationRecord& rec);

}  // namespace sct

#endif
