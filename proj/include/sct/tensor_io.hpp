#ifndef SCT_TENSOR_IO_HPP
#define SCT_TENSOR_IO_HPP

#include <string>

#include "sct/tensor.hpp"

namespace sct {

/// Tensor container file: one UTF-8 JSON header line
///   {"dtype":"f64","magic":"MDT1","order":"row-major",
///    "shape":[rows,cols,channels],"units":"..."}
/// terminated by '\n', followed by the raw little-endian payload in row-major
/// order with the channel index fastest (exactly Tensor3's memory layout).
/// f64 round-trips losslessly; f32 files load exactly and re-save bit-equal.

struct TensorFileInfo {
  std::string dtype;  // "f32" or "f64"
  std::string units;
};

/// Throws FormatError (naming the byte offset where possible) on bad magic,
/// malformed header, truncated payload or shape overflow.
Tensor3 read_tensor(const std::string& path, TensorFileInfo* info = nullptr);

void write_tensor(const Tensor3& t, const std::string& path,
                  const std::string& dtype = "f64",
                  const std::string& units = "");

/// Windowed grayscale export: binary PGM (P5) with
/// pixel = round(255 * clamp((v - lo) / (hi - lo), 0, 1)), halves rounded up.
/// Throws std::invalid_argument when lo >= hi or the channel is out of range.
void render_pgm(const Tensor3& t, int channel, double lo, double hi,
                const std::string& path);

}  // namespace sct

#endif
