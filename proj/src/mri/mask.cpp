#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dircn/mri/mri.hpp"

namespace dircn::mri {

std::size_t SamplingMask::count() const {
  return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), std::uint8_t{1}));
}

std::vector<std::size_t> SamplingMask::kept_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i]) out.push_back(i);
  }
  return out;
}

double SamplingMask::realized_acceleration() const {
  const std::size_t n = count();
  return n == 0 ? 0.0 : static_cast<double>(kept.size()) / static_cast<double>(n);
}

SamplingMask make_equispaced_mask(std::size_t n_ky, int acceleration, double center_fraction, std::size_t offset) {
  if (n_ky == 0) throw std::invalid_argument("make_equispaced_mask: n_ky must be positive");
  if (acceleration < 1) {
    throw std::invalid_argument("make_equispaced_mask: acceleration must be >= 1, got " + std::to_string(acceleration));
  }
  if (!(center_fraction >= 0.0 && center_fraction <= 1.0)) {
    throw std::invalid_argument("make_equispaced_mask: center_fraction must lie in [0, 1]");
  }
  const auto n = static_cast<long>(n_ky);
  const long n_center = std::lround(center_fraction * static_cast<double>(n));
  const long total = std::lround(static_cast<double>(n) / acceleration);
  const long target = total - n_center;
  if (target < 0) {
    throw std::invalid_argument("make_equispaced_mask: " + std::to_string(n_center) + " centre lines exceed the budget of " +
                                std::to_string(total) + " lines at acceleration " + std::to_string(acceleration));
  }

  SamplingMask mask;
  mask.kept.assign(n_ky, 0);
  mask.acceleration = acceleration;
  mask.center_fraction = center_fraction;
  mask.offset = offset;
  mask.center_begin = static_cast<std::size_t>(n / 2 - n_center / 2);
  mask.center_end = mask.center_begin + static_cast<std::size_t>(n_center);
  for (std::size_t i = mask.center_begin; i < mask.center_end; ++i) mask.kept[i] = 1;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n_ky; ++i) {
    if (i < mask.center_begin || i >= mask.center_end) candidates.push_back(i);
  }
  std::vector<std::uint8_t> chosen(candidates.size(), 0);
  long selected = 0;
  if (target > 0) {
    const long stride = std::max(1L, std::lround(static_cast<double>(candidates.size()) / static_cast<double>(target)));
    for (std::size_t p = offset; p < candidates.size(); p += static_cast<std::size_t>(stride)) {
      chosen[p] = 1;
      ++selected;
    }
  }

  // Outermost = farthest from the centre line; ties go to the higher index.
  const long middle = n / 2;
  auto farther = [&](std::size_t a, std::size_t b) {
    const long da = std::labs(static_cast<long>(candidates[a]) - middle);
    const long db = std::labs(static_cast<long>(candidates[b]) - middle);
    return da != db ? da > db : candidates[a] > candidates[b];
  };
  auto outermost = [&](std::uint8_t state) {
    std::size_t best = candidates.size();
    for (std::size_t p = 0; p < candidates.size(); ++p) {
      if (chosen[p] == state && (best == candidates.size() || farther(p, best))) best = p;
    }
    return best;
  };
  while (selected > target) {
    chosen[outermost(1)] = 0;
    --selected;
  }
  while (selected < target) {
    chosen[outermost(0)] = 1;
    ++selected;
  }
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    if (chosen[p]) mask.kept[candidates[p]] = 1;
  }
  return mask;
}

MultiCoilKSpace apply_mask(const MultiCoilKSpace& k, const SamplingMask& mask) {
  validate(k);
  if (mask.n_ky() != k.ny()) {
    throw std::invalid_argument("apply_mask: mask has " + std::to_string(mask.n_ky()) + " lines, k-space grid " +
                                to_string(k.data.shape()));
  }
  MultiCoilKSpace out{k.data};
  const std::size_t ny = k.ny();
  const std::size_t rows = out.data.size() / ny;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data.data() + r * ny;
    for (std::size_t j = 0; j < ny; ++j) {
      if (!mask.kept[j]) row[j] = 0.0;
    }
  }
  return out;
}

}  // namespace dircn::mri
