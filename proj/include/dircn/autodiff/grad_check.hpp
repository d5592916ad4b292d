#pragma once

#include <functional>
#include <vector>

#include "dircn/autodiff/value.hpp"

namespace dircn::ad {

using ScalarFn = std::function<DiffValue(const std::vector<DiffValue>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_element = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares reverse-mode gradients of a scalar-valued f against central
// finite differences for every element of every input that requires
// gradients. Error per element is |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8).
// Inputs' gradients are zeroed before and after. With max_per_input > 0
// only that many evenly spaced elements of each input are probed.
GradCheckResult grad_check_detailed(const ScalarFn& f, const std::vector<DiffValue>& inputs, double step = 1e-6,
                                    std::size_t max_per_input = 0);

double grad_check(const ScalarFn& f, const std::vector<DiffValue>& inputs, double step = 1e-6);

}  // namespace dircn::ad
