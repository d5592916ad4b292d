#pragma once

// Synthetic anatomy and coil profiles standing in for scanner data.

#include <cstdint>
#include <string>

#include "dircn/mri/mri.hpp"

namespace dircn::data {

struct PhantomSpec {
  std::size_t grid = 64;
  std::size_t ellipses = 10;
  double intensity_min = 0.1;
  double intensity_max = 1.0;
  double phase_amplitude = 0.5;  // radians, peak of the smooth phase field
  std::size_t coils = 4;
  double noise_sigma = 0.002;
  std::string contrast = "t1";  // grouping label only: t1, t2 or flair
  std::uint64_t seed = 0;
};

void validate(const PhantomSpec& spec);

// Sum of random ellipses times a low-order smooth phase, max magnitude 1.
// [1, 2, grid, grid]
mri::ComplexImage generate_phantom(const PhantomSpec& spec);

// Gaussian lobes centred outside the field of view at evenly spaced angles,
// with linear phase, normalized to unit RSS at every pixel.
mri::SensitivityMaps generate_sensitivities(std::size_t coils, std::size_t grid, std::uint64_t seed);

// Full noisy multi-coil k-space for one spec.
mri::MultiCoilKSpace acquire(const PhantomSpec& spec);

}  // namespace dircn::data
