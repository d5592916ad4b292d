#include "dircn/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dircn::ad {

GradCheckResult grad_check_detailed(const ScalarFn& f, const std::vector<DiffValue>& inputs, double step,
                                    std::size_t max_per_input) {
  if (!(step >= 1e-7 && step <= 1e-4)) {
    throw std::invalid_argument("grad_check: step " + std::to_string(step) + " outside [1e-7, 1e-4]");
  }
  for (auto input : inputs) {
    if (!input.is_leaf()) throw std::invalid_argument("grad_check: inputs must be leaves");
    input.zero_grad();
  }

  const DiffValue out = f(inputs);
  if (out.size() != 1) {
    throw std::invalid_argument("grad_check: f must be scalar-valued, got shape " + to_string(out.shape()));
  }
  out.backward();

  std::vector<std::vector<double>> analytic;
  for (const auto& input : inputs) analytic.emplace_back(input.grad().begin(), input.grad().end());

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    DiffValue input = inputs[k];
    if (!input.requires_grad()) continue;
    auto data = input.mutable_data();
    const std::size_t stride =
        max_per_input == 0 || data.size() <= max_per_input ? 1 : (data.size() + max_per_input - 1) / max_per_input;
    for (std::size_t i = 0; i < data.size(); i += stride) {
      const double saved = data[i];
      data[i] = saved + step;
      const double plus = f(inputs).item();
      data[i] = saved - step;
      const double minus = f(inputs).item();
      data[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double exact = analytic[k][i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double err = std::abs(exact - numeric) / denom;
      if (!(err <= result.max_relative_error)) {
        result = {err, k, i, exact, numeric};
      }
    }
  }
  for (auto input : inputs) input.zero_grad();
  return result;
}

double grad_check(const ScalarFn& f, const std::vector<DiffValue>& inputs, double step) {
  return grad_check_detailed(f, inputs, step).max_relative_error;
}

}  // namespace dircn::ad
