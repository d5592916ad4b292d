#include "dircn/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dircn/util/hash.hpp"

namespace dircn::data {
namespace {

// Pixel centres on [-1, 1].
double coord(std::size_t i, std::size_t n) { return (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n) - 1.0; }

struct Ellipse {
  double cx, cy, a, b, angle, intensity;

  bool contains(double u, double v) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double p = (u - cx) * c + (v - cy) * s;
    const double q = -(u - cx) * s + (v - cy) * c;
    return (p * p) / (a * a) + (q * q) / (b * b) <= 1.0;
  }
};

}  // namespace

void validate(const PhantomSpec& spec) {
  if (spec.grid < 16) throw std::invalid_argument("phantom: grid must be >= 16, got " + std::to_string(spec.grid));
  if (spec.coils < 1) throw std::invalid_argument("phantom: coils must be >= 1");
  if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("phantom: noise_sigma must be >= 0");
  if (!(spec.intensity_min >= 0.0 && spec.intensity_max >= spec.intensity_min)) {
    throw std::invalid_argument("phantom: need 0 <= intensity_min <= intensity_max");
  }
  if (spec.contrast != "t1" && spec.contrast != "t2" && spec.contrast != "flair") {
    throw std::invalid_argument("phantom: contrast must be t1, t2 or flair, got '" + spec.contrast + "'");
  }
}

mri::ComplexImage generate_phantom(const PhantomSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(util::mix_seed(spec.seed, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<Ellipse> shapes;
  for (std::size_t e = 0; e < spec.ellipses; ++e) {
    Ellipse el{};
    if (e == 0) {
      // Large outline so the object fills most of the field of view.
      el = {uniform(-0.1, 0.1), uniform(-0.1, 0.1), uniform(0.6, 0.85), uniform(0.6, 0.85), uniform(0.0, std::numbers::pi),
            uniform(spec.intensity_min, spec.intensity_max)};
    } else {
      el = {uniform(-0.5, 0.5), uniform(-0.5, 0.5), uniform(0.08, 0.4), uniform(0.08, 0.4), uniform(0.0, std::numbers::pi),
            uniform(spec.intensity_min, spec.intensity_max)};
    }
    shapes.push_back(el);
  }
  const double c[4] = {uniform(-1, 1), uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};

  const std::size_t n = spec.grid;
  std::vector<double> mag(n * n, 0.0), phase(n * n, 0.0);
  double peak = 0.0, phase_peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double u = coord(i, n), v = coord(j, n);
      double m = 0.0;
      for (const auto& el : shapes) {
        if (el.contains(u, v)) m += el.intensity;
      }
      mag[i * n + j] = m;
      phase[i * n + j] = c[0] * u + c[1] * v + c[2] * u * v + c[3] * (u * u - v * v);
      peak = std::max(peak, m);
      phase_peak = std::max(phase_peak, std::abs(phase[i * n + j]));
    }
  }
  const double scale = peak > 0.0 ? 1.0 / peak : 0.0;
  const double phase_scale = phase_peak > 0.0 ? spec.phase_amplitude / phase_peak : 0.0;

  Tensor out({1, 2, n, n});
  const std::size_t plane = n * n;
  for (std::size_t p = 0; p < plane; ++p) {
    const double m = mag[p] * scale;
    const double phi = phase[p] * phase_scale;
    out[p] = m * std::cos(phi);
    out[plane + p] = m * std::sin(phi);
  }
  return {out};
}

mri::SensitivityMaps generate_sensitivities(std::size_t coils, std::size_t grid, std::uint64_t seed) {
  if (coils < 1) throw std::invalid_argument("sensitivities: coils must be >= 1");
  if (grid < 1) throw std::invalid_argument("sensitivities: grid must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const std::size_t n = grid, plane = n * n;
  Tensor s({coils, 2, n, n});
  for (std::size_t j = 0; j < coils; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(coils) + uniform(-0.2, 0.2);
    const double px = 1.3 * std::cos(theta), py = 1.3 * std::sin(theta);
    const double width = uniform(0.9, 1.3);
    const double p0 = uniform(-std::numbers::pi, std::numbers::pi);
    const double pu = uniform(-0.5, 0.5), pv = uniform(-0.5, 0.5);
    double* re = s.data() + j * 2 * plane;
    double* im = re + plane;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        const double u = coord(a, n), v = coord(b, n);
        const double d2 = (u - px) * (u - px) + (v - py) * (v - py);
        const double m = std::exp(-d2 / (2.0 * width * width));
        const double phi = p0 + pu * u + pv * v;
        re[a * n + b] = m * std::cos(phi);
        im[a * n + b] = m * std::sin(phi);
      }
    }
  }
  for (std::size_t p = 0; p < plane; ++p) {
    double e = 0.0;
    for (std::size_t j = 0; j < coils; ++j) {
      const double re = s[j * 2 * plane + p], im = s[(j * 2 + 1) * plane + p];
      e += re * re + im * im;
    }
    const double r = 1.0 / std::sqrt(e);
    for (std::size_t j = 0; j < coils; ++j) {
      s[j * 2 * plane + p] *= r;
      s[(j * 2 + 1) * plane + p] *= r;
    }
  }
  return {s};
}

mri::MultiCoilKSpace acquire(const PhantomSpec& spec) {
  const auto x = generate_phantom(spec);
  const auto maps = generate_sensitivities(spec.coils, spec.grid, util::mix_seed(spec.seed, 1));
  return mri::simulate_acquisition(x, maps, spec.noise_sigma, util::mix_seed(spec.seed, 2));
}

}  // namespace dircn::data
