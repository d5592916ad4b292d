#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "dircn/autodiff/ops.hpp"
#include "dircn/mri/mri.hpp"

namespace dircn::mri {
namespace {

void validate_layout(std::string_view what, const Tensor& t) {
  if (t.rank() != 4 || t.dim(1) != 2 || t.dim(0) == 0 || t.dim(2) == 0 || t.dim(3) == 0) {
    throw std::invalid_argument(std::string(what) + ": expected [coils,2,nx,ny], got " + to_string(t.shape()));
  }
}

void require_same_grid(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw std::invalid_argument(std::string(op) + ": grid mismatch " + to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
  }
}

}  // namespace

void validate(const MultiCoilKSpace& k) {
  validate_layout("k-space", k.data);
  for (double v : k.data.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("k-space: non-finite sample");
  }
}

void validate(const SensitivityMaps& s) { validate_layout("sensitivity maps", s.data); }

namespace diff {

ad::DiffValue coil_reduce(const ad::DiffValue& kspace, const ad::DiffValue& maps) {
  if (kspace.shape() != maps.shape()) {
    throw std::invalid_argument("coil_reduce: k-space " + to_string(kspace.shape()) + " and maps " +
                                to_string(maps.shape()) + " differ");
  }
  return ad::sum_axis(ad::complex_mul(ad::ifft2c(kspace), ad::complex_conj(maps)), 0);
}

ad::DiffValue coil_expand(const ad::DiffValue& image, const ad::DiffValue& maps) {
  if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 2 || image.dim(2) != maps.dim(2) ||
      image.dim(3) != maps.dim(3)) {
    throw std::invalid_argument("coil_expand: image " + to_string(image.shape()) + " does not match maps " +
                                to_string(maps.shape()));
  }
  return ad::complex_mul(ad::repeat(image, 0, maps.dim(0)), maps);
}

ad::DiffValue rss(const ad::DiffValue& coil_images) {
  return ad::sqrt(ad::sum_axis(ad::sum_axis(ad::square(coil_images), 1), 0));
}

}  // namespace diff

Tensor rss(const ComplexImage& coil_images) {
  validate_layout("rss", coil_images.data);
  ad::NoGradGuard no_grad;
  const auto out = diff::rss(ad::constant(coil_images.data));
  return out.value().reshaped({coil_images.nx(), coil_images.ny()});
}

ComplexImage coil_reduce(const MultiCoilKSpace& k, const SensitivityMaps& maps) {
  validate(k);
  validate(maps);
  require_same_grid("coil_reduce", k.data, maps.data);
  ad::NoGradGuard no_grad;
  return {diff::coil_reduce(ad::constant(k.data), ad::constant(maps.data)).value()};
}

ComplexImage coil_expand(const ComplexImage& image, const SensitivityMaps& maps) {
  validate(maps);
  require_same_grid("coil_expand", image.data, maps.data);
  ad::NoGradGuard no_grad;
  return {diff::coil_expand(ad::constant(image.data), ad::constant(maps.data)).value()};
}

ComplexImage to_image(const MultiCoilKSpace& k) {
  ad::NoGradGuard no_grad;
  return {ad::ifft2c(ad::constant(k.data)).value()};
}

MultiCoilKSpace to_kspace(const ComplexImage& coil_images) {
  ad::NoGradGuard no_grad;
  return {ad::fft2c(ad::constant(coil_images.data)).value()};
}

MultiCoilKSpace simulate_acquisition(const ComplexImage& x, const SensitivityMaps& maps, double noise_sigma,
                                     std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("simulate_acquisition: noise_sigma must be >= 0");
  if (x.data.rank() != 4 || x.count() != 1) {
    throw std::invalid_argument("simulate_acquisition: expected a single complex image [1,2,nx,ny], got " +
                                to_string(x.data.shape()));
  }
  MultiCoilKSpace k = to_kspace(coil_expand(x, maps));
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (auto& v : k.data.values()) v += noise(rng);
  }
  return k;
}

std::size_t crop_side(const MultiCoilKSpace& k) { return std::min(k.nx(), k.ny()); }

Preprocessed preprocess(const MultiCoilKSpace& k_full, const SamplingMask& mask) {
  validate(k_full);
  const std::size_t side = crop_side(k_full);
  if (side == 0) throw std::invalid_argument("preprocess: non-positive crop size");
  if (mask.n_ky() != side) {
    throw std::invalid_argument("preprocess: mask has " + std::to_string(mask.n_ky()) + " lines but the crop is " +
                                std::to_string(side) + " wide");
  }
  ad::NoGradGuard no_grad;
  const auto images = ad::ifft2c(ad::constant(k_full.data));
  const auto cropped = ad::crop2d(images, (k_full.nx() - side) / 2, (k_full.ny() - side) / 2, side, side);
  Preprocessed out;
  out.target = rss(ComplexImage{cropped.value()});
  out.undersampled = apply_mask(MultiCoilKSpace{ad::fft2c(cropped).value()}, mask);
  return out;
}

Tensor zero_filled(const MultiCoilKSpace& k_u) { return rss(to_image(k_u)); }

}  // namespace dircn::mri
