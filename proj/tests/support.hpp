#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "dircn/autodiff/value.hpp"
#include "dircn/tensor.hpp"

namespace dircn::test {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

inline ad::DiffValue random_variable(Shape shape, std::uint64_t seed, double scale = 1.0) {
  return ad::variable(random_tensor(std::move(shape), seed, -scale, scale));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double l2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

// Direct O(N^2) centered orthonormal DFT of one split-plane image. Test
// oracle; independent of the FFT backend.
inline std::vector<std::complex<double>> naive_centered_dft(std::size_t h, std::size_t w,
                                                            const std::vector<std::complex<double>>& x,
                                                            bool inverse) {
  const double pi = std::acos(-1.0);
  const double sign = inverse ? 1.0 : -1.0;
  const long ch = static_cast<long>(h / 2), cw = static_cast<long>(w / 2);
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t z = 0; z < w; ++z) {
          const double phase = sign * 2.0 * pi *
                               (static_cast<double>((static_cast<long>(u) - ch) * (static_cast<long>(y) - ch)) / h +
                                static_cast<double>((static_cast<long>(v) - cw) * (static_cast<long>(z) - cw)) / w);
          acc += x[y * w + z] * std::polar(1.0, phase);
        }
      }
      out[u * w + v] = acc / std::sqrt(static_cast<double>(h * w));
    }
  }
  return out;
}

}  // namespace dircn::test
