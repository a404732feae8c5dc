#include "sct/tensor_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "sct/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor file I/O assumes a little-endian host");

namespace sct {

namespace {
constexpr std::size_t kMaxHeaderBytes = 4096;
}

Tensor3 read_tensor(const std::string& path, TensorFileInfo* info) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("tensor file: cannot open " + path);

  std::string header;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '\n') break;
    header.push_back(ch);
    if (header.size() > kMaxHeaderBytes)
      throw FormatError("tensor file: header exceeds " +
                        std::to_string(kMaxHeaderBytes) + " bytes in " + path);
  }
  if (ch != '\n')
    throw FormatError("tensor file: unterminated header (EOF at byte " +
                      std::to_string(header.size()) + ") in " + path);

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("tensor file: header is not valid JSON in " + path +
                      ": " + e.what());
  }
  if (h.value("magic", "") != "MDT1")
    throw FormatError("tensor file: bad magic in " + path);
  const std::string dtype = h.value("dtype", "");
  if (dtype != "f32" && dtype != "f64")
    throw FormatError("tensor file: unsupported dtype '" + dtype + "' in " +
                      path);
  if (h.value("order", "") != "row-major")
    throw FormatError("tensor file: unsupported order in " + path);
  if (!h.contains("shape") || !h["shape"].is_array() || h["shape"].size() != 3)
    throw FormatError("tensor file: shape must be a 3-array in " + path);
  std::int64_t shape[3];
  for (int i = 0; i < 3; ++i) {
    if (!h["shape"][i].is_number_integer())
      throw FormatError("tensor file: non-integer shape entry in " + path);
    shape[i] = h["shape"][i].get<std::int64_t>();
    if (shape[i] < 0 || shape[i] > (1 << 24))
      throw FormatError("tensor file: shape entry out of range in " + path);
  }
  const std::int64_t count = shape[0] * shape[1] * shape[2];
  if (count > (std::int64_t(1) << 31))
    throw FormatError("tensor file: shape overflow in " + path);

  const std::size_t elem = (dtype == "f32") ? 4 : 8;
  const std::size_t payload_offset = header.size() + 1;
  std::vector<double> data(static_cast<std::size_t>(count));
  if (dtype == "f64") {
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * elem));
  } else {
    std::vector<float> buf(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * elem));
    for (std::size_t i = 0; i < buf.size(); ++i) data[i] = buf[i];
  }
  if (in.gcount() != static_cast<std::streamsize>(count * elem))
    throw FormatError(
        "tensor file: truncated payload in " + path + " (expected " +
        std::to_string(count * elem) + " bytes at offset " +
        std::to_string(payload_offset) + ", got " +
        std::to_string(in.gcount()) + ")");

  if (info) {
    info->dtype = dtype;
    info->units = h.value("units", "");
  }
  return Tensor3::from_data(static_cast<int>(shape[0]),
                            static_cast<int>(shape[1]),
                            static_cast<int>(shape[2]), std::move(data));
}

void write_tensor(const Tensor3& t, const std::string& path,
                  const std::string& dtype, const std::string& units) {
  if (dtype != "f32" && dtype != "f64")
    throw std::invalid_argument("write_tensor: dtype must be f32 or f64");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("tensor file: cannot write " + path);

  nlohmann::json h{{"magic", "MDT1"},
                   {"dtype", dtype},
                   {"shape", {t.rows(), t.cols(), t.channels()}},
                   {"order", "row-major"},
                   {"units", units}};
  out << h.dump() << '\n';
  if (dtype == "f64") {
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  } else {
    std::vector<float> buf(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      buf[i] = static_cast<float>(t.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw FormatError("tensor file: short write to " + path);
}

void render_pgm(const Tensor3& t, int channel, double lo, double hi,
                const std::string& path) {
  if (!(lo < hi)) throw std::invalid_argument("render_pgm: need lo < hi");
  if (channel < 0 || channel >= t.channels())
    throw std::invalid_argument("render_pgm: channel out of range");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("render_pgm: cannot write " + path);
  out << "P5\n" << t.cols() << " " << t.rows() << "\n255\n";
  std::vector<unsigned char> row(t.cols());
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) {
      double v = (t(r, c, channel) - lo) / (hi - lo);
      v = std::min(1.0, std::max(0.0, v));
      row[c] = static_cast<unsigned char>(std::floor(255.0 * v + 0.5));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw FormatError("render_pgm: short write to " + path);
}

}  // namespace sct
