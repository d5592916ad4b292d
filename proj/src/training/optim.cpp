#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dircn/autodiff/ops.hpp"
#include "dircn/metrics/metrics.hpp"
#include "dircn/training/training.hpp"

namespace dircn::train {

ad::DiffValue reconstruction_loss(const ad::DiffValue& pred, const ad::DiffValue& target, double data_range) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("reconstruction_loss: prediction " + to_string(pred.shape()) + " vs target " +
                                to_string(target.shape()));
  }
  const auto structural = ad::add_scalar(ad::mul_scalar(metrics::ssim(pred, target, data_range), -0.5), 0.5);
  const auto l1 = ad::mul_scalar(ad::mean(ad::abs(ad::sub(pred, target))), 0.5 / data_range);
  return ad::add(structural, l1);
}

double lr_schedule(std::size_t epoch, double base_lr, std::size_t step_size, double gamma) {
  if (step_size == 0) throw std::invalid_argument("lr_schedule: step_size must be positive");
  return base_lr * std::pow(gamma, static_cast<double>(epoch / step_size));
}

Adam::Adam(const net::ParameterSet& params, bool amsgrad) {
  state_.amsgrad = amsgrad;
  for (const auto& p : params.items()) {
    state_.m.emplace_back(p.value.size(), 0.0);
    state_.v.emplace_back(p.value.size(), 0.0);
    state_.v_max.emplace_back(amsgrad ? p.value.size() : 0, 0.0);
  }
}

void Adam::step(net::ParameterSet& params, double lr) {
  auto& items = params.items();
  if (items.size() != state_.m.size()) throw std::invalid_argument("adam: parameter list changed size");
  for (const auto& p : items) {
    for (double g : p.value.grad()) {
      if (!std::isfinite(g)) throw std::runtime_error("adam: non-finite gradient in '" + p.name + "'");
    }
  }
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double bc1 = 1.0 - std::pow(state_.beta1, t);
  const double bc2 = std::sqrt(1.0 - std::pow(state_.beta2, t));
  const double b1 = state_.beta1, b2 = state_.beta2;
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto value = items[k].value.mutable_data();
    const auto grad = items[k].value.grad();
    auto& m = state_.m[k];
    auto& v = state_.v[k];
    auto& v_max = state_.v_max[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      double second = v[i];
      if (state_.amsgrad) {
        v_max[i] = std::max(v_max[i], v[i]);
        second = v_max[i];
      }
      value[i] -= lr / bc1 * m[i] / (std::sqrt(second) / bc2 + state_.eps);
    }
  }
}

double center_fraction_for(int acceleration) {
  if (acceleration < 1) throw std::invalid_argument("acceleration must be >= 1");
  return std::min(1.0, 0.32 / acceleration);
}

Prepared prepare(const mri::MultiCoilKSpace& k_full, int acceleration, std::size_t offset) {
  const std::size_t side = mri::crop_side(k_full);
  Prepared out;
  out.mask = mri::make_equispaced_mask(side, acceleration, center_fraction_for(acceleration), offset);
  auto pre = mri::preprocess(k_full, out.mask);
  out.k_u = std::move(pre.undersampled);
  out.target = std::move(pre.target);
  out.data_range = *std::max_element(out.target.values().begin(), out.target.values().end());
  if (!(out.data_range > 0.0)) out.data_range = 1.0;
  return out;
}

}  // namespace dircn::train
