#pragma once

// Little-endian float64 / integer encoding independent of host byte order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dircn::util {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffU) << (8 * (7 - i));
    return r;
  }
  return v;
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), 8);
}

inline void write_f64s(std::ostream& out, std::span<const double> xs) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(xs.data()), static_cast<std::streamsize>(xs.size() * 8));
  } else {
    for (double x : xs) write_u64(out, std::bit_cast<std::uint64_t>(x));
  }
}

inline void read_exact(std::istream& in, void* dst, std::size_t n, const std::string& what) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw std::runtime_error(what + ": truncated data");
}

inline std::uint64_t read_u64(std::istream& in, const std::string& what) {
  std::uint64_t v = 0;
  read_exact(in, &v, 8, what);
  return to_le(v);
}

inline void read_f64s(std::istream& in, std::span<double> xs, const std::string& what) {
  read_exact(in, xs.data(), xs.size() * 8, what);
  if constexpr (std::endian::native == std::endian::big) {
    for (double& x : xs) x = std::bit_cast<double>(to_le(std::bit_cast<std::uint64_t>(x)));
  }
}

}  // namespace dircn::util
