#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "dircn/autodiff/fft.hpp"

namespace dircn::fft {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t h, std::size_t w) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find({h, w});
    if (it != plans_.end()) return it->second;
    // New-array execution must keep the imaginary plane at the same offset
    // from the real plane as here: one contiguous [re | im] buffer per side.
    const std::size_t n = h * w;
    std::vector<double> in(2 * n), out(2 * n);
    fftw_iodim dims[2] = {{static_cast<int>(h), static_cast<int>(w), static_cast<int>(w)},
                          {static_cast<int>(w), 1, 1}};
    fftw_plan plan = fftw_plan_guru_split_dft(2, dims, 0, nullptr, in.data(), in.data() + n, out.data(),
                                              out.data() + n, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fft: planning failed for " + std::to_string(h) + "x" + std::to_string(w));
    plans_.emplace(std::make_pair(h, w), plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, std::size_t>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

// dst[(i + sh) % h][(j + sw) % w] = src[i][j]
void roll(std::size_t h, std::size_t w, std::size_t sh, std::size_t sw, const double* src, double* dst) {
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t di = (i + sh) % h;
    for (std::size_t j = 0; j < w; ++j) dst[di * w + (j + sw) % w] = src[i * w + j];
  }
}

}  // namespace

void centered_2d(std::size_t h, std::size_t w, const double* re_in, const double* im_in, double* re_out,
                 double* im_out, bool inverse) {
  if (h == 0 || w == 0) throw std::invalid_argument("fft: empty image");
  const std::size_t n = h * w;
  const std::size_t ch = h / 2;
  const std::size_t cw = w / 2;
  std::vector<double> shifted(2 * n), spectrum(2 * n);
  // ifftshift moves the centre sample to the origin.
  roll(h, w, h - ch, w - cw, re_in, shifted.data());
  roll(h, w, h - ch, w - cw, im_in, shifted.data() + n);

  // FFTW's split interface is forward-only; inverse = conj(fft(conj(x))).
  const double im_sign = inverse ? -1.0 : 1.0;
  if (inverse) {
    for (std::size_t i = n; i < 2 * n; ++i) shifted[i] = -shifted[i];
  }
  fftw_execute_split_dft(cache().get(h, w), shifted.data(), shifted.data() + n, spectrum.data(), spectrum.data() + n);

  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    spectrum[i] *= scale;
    spectrum[n + i] *= im_sign * scale;
  }
  roll(h, w, ch, cw, spectrum.data(), re_out);
  roll(h, w, ch, cw, spectrum.data() + n, im_out);
}

}  // namespace dircn::fft
