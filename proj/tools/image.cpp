#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dircn::cli {

Tensor error_map(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("error_map: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i] - b[i]);
  return out;
}

double max_value(const Tensor& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, v);
  return m;
}

void write_pgm16(const std::filesystem::path& path, const Tensor& image, double scale) {
  if (image.rank() != 2) throw std::invalid_argument("write_pgm16: expected [H, W], got " + to_string(image.shape()));
  const std::size_t h = image.dim(0), w = image.dim(1);
  std::vector<unsigned char> bytes;
  bytes.reserve(2 * h * w);
  for (double v : image.values()) {
    const double unit = scale > 0.0 ? std::clamp(v / scale, 0.0, 1.0) : 0.0;
    const auto q = static_cast<unsigned>(std::lround(unit * 65535.0));
    bytes.push_back(static_cast<unsigned char>(q >> 8));  // big-endian per the format
    bytes.push_back(static_cast<unsigned char>(q & 0xff));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "P5\n" << w << ' ' << h << "\n65535\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

Tensor read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P5" || maxval != 65535) throw std::runtime_error("not a 16-bit graymap: " + path.string());
  in.get();
  std::vector<unsigned char> bytes(2 * w * h);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw std::runtime_error("truncated graymap: " + path.string());
  Tensor out({h, w});
  for (std::size_t i = 0; i < h * w; ++i) out[i] = bytes[2 * i] * 256.0 + bytes[2 * i + 1];
  return out;
}

}  // namespace dircn::cli
