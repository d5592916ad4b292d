#include "dircn/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dircn::simd {
namespace {

bool host_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* detect() {
  if (const char* env = std::getenv("DIRCN_SIMD"); env && std::string(env) == "scalar") {
    return &scalar_kernels();
  }
  const auto isas = available();
  return &kernels_for(isas.back());
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

std::vector<Isa> available() {
  std::vector<Isa> out{Isa::Scalar};
  if (host_supports(Isa::Avx2)) out.push_back(Isa::Avx2);
  if (host_supports(Isa::Neon)) out.push_back(Isa::Neon);
  return out;
}

const KernelTable& kernels_for(Isa isa) {
  if (!host_supports(isa)) {
    throw std::invalid_argument("simd: " + std::string(name(isa)) + " not supported on this host");
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::Avx2:
      return avx2_kernels();
#endif
#if defined(__aarch64__)
    case Isa::Neon:
      return neon_kernels();
#endif
    default:
      return scalar_kernels();
  }
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void force(Isa isa) { slot().store(&kernels_for(isa)); }

void reset() { slot().store(detect()); }

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace dircn::simd
