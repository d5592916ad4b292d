#pragma once

// Cartesian multi-coil acquisition model and data plumbing.
//
// Layout conventions: complex arrays carry a (real, imaginary) axis of
// extent 2 directly before the two spatial axes. K-space and per-coil
// images are [coils, 2, n_kx, n_ky]; a coil-combined complex image is
// [1, 2, n_kx, n_ky]; magnitude images are [n_kx, n_ky]. Phase-encode lines
// run along the last axis.

#include <cstdint>
#include <utility>
#include <vector>

#include "dircn/autodiff/value.hpp"
#include "dircn/tensor.hpp"

namespace dircn::mri {

struct MultiCoilKSpace {
  Tensor data;

  std::size_t coils() const { return data.dim(0); }
  std::size_t nx() const { return data.dim(2); }
  std::size_t ny() const { return data.dim(3); }
};

// Complex image, single (1 x ...) or per coil (coils x ...).
struct ComplexImage {
  Tensor data;

  std::size_t count() const { return data.dim(0); }
  std::size_t nx() const { return data.dim(2); }
  std::size_t ny() const { return data.dim(3); }
};

struct SensitivityMaps {
  Tensor data;

  std::size_t coils() const { return data.dim(0); }
  std::size_t nx() const { return data.dim(2); }
  std::size_t ny() const { return data.dim(3); }
};

struct SamplingMask {
  std::vector<std::uint8_t> kept;  // one flag per phase-encode line
  int acceleration = 1;
  double center_fraction = 0.0;
  std::size_t offset = 0;
  std::size_t center_begin = 0;  // fully sampled block [center_begin, center_end)
  std::size_t center_end = 0;

  std::size_t n_ky() const { return kept.size(); }
  std::size_t count() const;
  std::vector<std::size_t> kept_indices() const;
  // n_ky / count(kept)
  double realized_acceleration() const;
};

// Validates [coils, 2, nx, ny] layout and finite values.
void validate(const MultiCoilKSpace& k);
void validate(const SensitivityMaps& s);

// Equidistant phase-encode mask with a fully sampled centre. Keeps
// round(n_ky * center_fraction) centre lines plus equally spaced outer lines
// so that exactly round(n_ky / acceleration) lines are kept.
SamplingMask make_equispaced_mask(std::size_t n_ky, int acceleration, double center_fraction, std::size_t offset = 0);

// Zeroes every dropped phase-encode line.
MultiCoilKSpace apply_mask(const MultiCoilKSpace& k, const SamplingMask& mask);

// k_j = fft2c(S_j * x) + noise, noise i.i.d. complex Gaussian with standard
// deviation noise_sigma per real component.
MultiCoilKSpace simulate_acquisition(const ComplexImage& x, const SensitivityMaps& maps, double noise_sigma,
                                     std::uint64_t seed);

// Root sum of squares over coils and the complex axis -> [nx, ny].
Tensor rss(const ComplexImage& coil_images);

ComplexImage coil_reduce(const MultiCoilKSpace& k, const SensitivityMaps& maps);
ComplexImage coil_expand(const ComplexImage& image, const SensitivityMaps& maps);

ComplexImage to_image(const MultiCoilKSpace& k);
MultiCoilKSpace to_kspace(const ComplexImage& coil_images);

struct Preprocessed {
  MultiCoilKSpace undersampled;
  Tensor target;  // [s, s] magnitude ground truth
};

// Side of the central square crop applied by preprocess().
std::size_t crop_side(const MultiCoilKSpace& k);

// Inverse transform per coil, central square crop of side min(nx, ny),
// ground truth = RSS magnitude; model input = masked fft2c of the crop.
Preprocessed preprocess(const MultiCoilKSpace& k_full, const SamplingMask& mask);

// RSS magnitude of the inverse transform of undersampled k-space.
Tensor zero_filled(const MultiCoilKSpace& k_u);

// Differentiable forms used inside the network. Shapes as above.
namespace diff {
ad::DiffValue coil_reduce(const ad::DiffValue& kspace, const ad::DiffValue& maps);
ad::DiffValue coil_expand(const ad::DiffValue& image, const ad::DiffValue& maps);
// [c, 2, H, W] -> [1, 1, H, W]
ad::DiffValue rss(const ad::DiffValue& coil_images);
}  // namespace diff

}  // namespace dircn::mri
