#pragma once

// Data-parallel inner loops used by the autodiff primitives.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2+FMA on x86-64, NEON on AArch64) are compiled into separate
// translation units and selected once at startup from the CPU's reported
// features. Setting DIRCN_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <string_view>
#include <vector>

namespace dircn::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // sum_i x[i] * y[i]
  double (*dot)(std::size_t n, const double* x, const double* y);
  // out[i] = a[i] + b[i]
  void (*add)(std::size_t n, const double* a, const double* b, double* out);
  // out[i] = a[i] * b[i]
  void (*mul)(std::size_t n, const double* a, const double* b, double* out);
  // y[i] += a[i] * b[i]
  void (*mul_acc)(std::size_t n, const double* a, const double* b, double* y);
  // out[i] = s * x[i]
  void (*scale)(std::size_t n, double s, const double* x, double* out);
  double (*sum)(std::size_t n, const double* x);
};

const KernelTable& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_kernels();
#endif
#if defined(__aarch64__)
const KernelTable& neon_kernels();
#endif

// Kernel set selected for this process.
const KernelTable& active();

// ISAs this host can execute, scalar first.
std::vector<Isa> available();
const KernelTable& kernels_for(Isa isa);

// Overrides the active table; used by equivalence tests and benchmarks.
void force(Isa isa);
void reset();

std::string_view name(Isa isa);

}  // namespace dircn::simd
