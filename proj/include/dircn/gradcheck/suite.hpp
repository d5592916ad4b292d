#pragma once

#include <functional>
#include <string>
#include <vector>

namespace dircn::gradcheck {

struct CheckResult {
  std::string name;
  std::string module;  // "autodiff" or "network"
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_relative_error <= tolerance; }
};

// Every differentiable op with a finite-difference check, in report order.
std::vector<std::string> registered(const std::string& module);

// module: "all", "autodiff" or "network". Each registered op appears once,
// reporting its worst error over the shapes it is probed on.
std::vector<CheckResult> run(const std::string& module,
                             const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace dircn::gradcheck
