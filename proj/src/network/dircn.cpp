#include "dircn/network/dircn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "dircn/autodiff/ops.hpp"

namespace dircn::net {
namespace {

constexpr double kInitialLambda = 0.01;
constexpr double kMapEps = 1e-24;

std::string cascade_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cascade%02zu", i);
  return buf;
}

void check_inputs(const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask) {
  mri::validate(k_u);
  if (mask.n_ky() != k_u.ny()) {
    throw std::invalid_argument("mask has " + std::to_string(mask.n_ky()) + " lines but k-space is " +
                                dircn::to_string(k_u.data.shape()));
  }
}

}  // namespace

double inverse_softplus(double value) { return std::log(std::expm1(value)); }

ad::DiffValue data_consistency(const ad::DiffValue& k_p, const Tensor& k_u, const mri::SamplingMask& mask,
                               const ad::DiffValue& lambda) {
  if (k_p.shape() != k_u.shape() || k_u.rank() != 4 || k_u.dim(1) != 2) {
    throw std::invalid_argument("data_consistency: prediction " + dircn::to_string(k_p.shape()) + " and measurement " +
                                dircn::to_string(k_u.shape()) + " must share a [coils,2,nx,ny] grid");
  }
  if (mask.n_ky() != k_u.dim(3)) {
    throw std::invalid_argument("data_consistency: mask has " + std::to_string(mask.n_ky()) + " lines, grid has " +
                                std::to_string(k_u.dim(3)));
  }
  if (lambda.size() != 1) throw std::invalid_argument("data_consistency: lambda must hold one value");
  const double lam = lambda.item();
  if (!(lam >= 0.0)) throw std::invalid_argument("data_consistency: lambda must be >= 0, got " + std::to_string(lam));

  const double a = lam / (1.0 + lam);
  const std::size_t ny = k_u.dim(3);
  Tensor out(k_u.shape());
  const auto& kp = k_p.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mask.kept[i % ny] ? k_u[i] + a * (kp[i] - k_u[i]) : kp[i];
  }
  return ad::record(std::move(out), {k_p, lambda}, "data_consistency",
                    [k_u, kept = mask.kept, a, lam, ny](ad::Node& self) {
                      ad::Node& p = *self.parents[0];
                      ad::Node& l = *self.parents[1];
                      const auto& g = self.pass_grad;
                      if (p.requires_grad) {
                        auto& gp = p.accum();
                        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += kept[i % ny] ? a * g[i] : g[i];
                      }
                      if (l.requires_grad) {
                        double s = 0.0;
                        for (std::size_t i = 0; i < g.size(); ++i) {
                          if (kept[i % ny]) s += g[i] * (p.value[i] - k_u[i]);
                        }
                        l.accum()[0] += s / ((1.0 + lam) * (1.0 + lam));
                      }
                    });
}

Dircn::Dircn(const ModelConfig& config) : config_(config), params_(std::make_unique<ParameterSet>(config.init_seed)) {
  validate(config);
  UNetSpec sens;
  sens.kind = config.subnet;
  sens.base_channels = config.sens_net_channels;
  sens.levels = config.sens_levels();
  sens.cardinality = config.cardinality;
  sens.se_ratio = config.se_ratio;
  sens_net_ = std::make_unique<UNet>(*params_, "sens", sens);

  for (std::size_t i = 0; i < config.cascades; ++i) {
    UNetSpec spec;
    spec.kind = config.subnet;
    spec.in_channels = config.dense ? 2 * (i + 1) : 2;
    spec.base_channels = config.base_channels;
    spec.levels = config.levels;
    spec.cardinality = config.cardinality;
    spec.se_ratio = config.se_ratio;
    spec.accepts_injection = config.interconnections;
    const std::string name = cascade_name(i);
    UNet net(*params_, name + ".net", spec);
    auto raw = params_->create_filled(name + ".dc.lambda_raw", {1}, inverse_softplus(kInitialLambda));
    cascades_.push_back({std::move(net), raw});
  }
}

ad::DiffValue Dircn::lambda(std::size_t cascade) const { return ad::softplus(cascades_.at(cascade).lambda_raw); }

ad::DiffValue Dircn::estimate_sensitivities(const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask) const {
  check_inputs(k_u, mask);
  if (mask.center_end <= mask.center_begin) {
    throw std::invalid_argument("estimate_sensitivities: mask has no fully sampled centre");
  }
  Tensor acs = k_u.data;
  const std::size_t ny = k_u.ny();
  for (std::size_t i = 0; i < acs.size(); ++i) {
    const std::size_t j = i % ny;
    if (j < mask.center_begin || j >= mask.center_end) acs[i] = 0.0;
  }
  Tensor images = mri::to_image(mri::MultiCoilKSpace{std::move(acs)}).data;
  const Tensor magnitude = mri::rss(mri::ComplexImage{images});
  const double peak = *std::max_element(magnitude.values().begin(), magnitude.values().end());
  if (peak > 0.0) {
    for (auto& v : images.values()) v /= peak;
  }

  const auto x = ad::constant(std::move(images));
  const auto maps = ad::add(x, sens_net_->forward(x).y);
  const auto energy = ad::sum_axis(ad::sum_axis(ad::square(maps), 1), 0);
  const auto norm = ad::sqrt(ad::add_scalar(energy, kMapEps));
  return ad::div(maps, ad::repeat(ad::repeat(norm, 1, 2), 0, k_u.coils()));
}

void Dircn::cascade_forward(CascadeState& state, std::size_t index, const ad::DiffValue& maps,
                            const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask,
                            ForwardTrace* trace) const {
  const Cascade& cascade = cascades_.at(index);
  if (state.history.size() != index) {
    throw std::invalid_argument("cascade_forward: state holds " + std::to_string(state.history.size()) +
                                " reduced images, cascade " + std::to_string(index) + " needs " + std::to_string(index));
  }
  const auto reduced = mri::diff::coil_reduce(state.kspace, maps);
  state.history.push_back(reduced);

  ad::DiffValue input = reduced;
  if (config_.dense) {
    std::vector<ad::DiffValue> parts(state.history.rbegin(), state.history.rend());
    input = ad::concat(parts, 1);
  }

  std::vector<ad::DiffValue> injected;
  bool all_zero = false;
  if (config_.interconnections) {
    if (index == 0) {
      for (const auto& shape : cascade.net.feature_shapes(1, k_u.nx(), k_u.ny())) injected.push_back(ad::constant(Tensor(shape)));
      all_zero = true;
    } else {
      injected = state.features;
    }
  }
  if (trace) {
    trace->subnet_input_channels.push_back(input.dim(1));
    std::vector<Shape> shapes;
    for (const auto& f : injected) shapes.push_back(f.shape());
    trace->injected_shapes.push_back(std::move(shapes));
    trace->injected_all_zero.push_back(all_zero);
  }

  auto out = cascade.net.forward(input, config_.interconnections ? &injected : nullptr);
  const auto refined = ad::add(reduced, out.y);
  const auto predicted = ad::fft2c(mri::diff::coil_expand(refined, maps));
  state.kspace = data_consistency(predicted, k_u.data, mask, lambda(index));
  state.features = std::move(out.harvested);
}

ad::DiffValue Dircn::forward(const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask, ForwardTrace* trace) const {
  check_inputs(k_u, mask);
  const auto maps = estimate_sensitivities(k_u, mask);
  CascadeState state{ad::constant(k_u.data), {}, {}};
  for (std::size_t i = 0; i < cascades_.size(); ++i) cascade_forward(state, i, maps, k_u, mask, trace);
  return mri::diff::rss(ad::ifft2c(state.kspace));
}

Tensor Dircn::reconstruct(const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask) const {
  ad::NoGradGuard no_grad;
  return forward(k_u, mask).value().reshaped({k_u.nx(), k_u.ny()});
}

}  // namespace dircn::net
