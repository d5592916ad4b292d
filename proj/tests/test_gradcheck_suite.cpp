#include <algorithm>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "dircn/autodiff/fault.hpp"
#include "dircn/gradcheck/suite.hpp"

using namespace dircn;

TEST_CASE("registry lists every op once") {
  const auto all = gradcheck::registered("all");
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == all.size());
  CHECK(all.size() == gradcheck::registered("autodiff").size() + gradcheck::registered("network").size());
  for (const char* name : {"conv2d", "conv_transpose2d", "instance_norm", "fft2c", "ifft2c", "silu", "complex_abs",
                           "data_consistency", "ssim", "dircn_end_to_end"}) {
    CHECK(std::find(all.begin(), all.end(), name) != all.end());
  }
  CHECK_THROWS_AS(gradcheck::registered("tensor"), std::invalid_argument);
}

TEST_CASE("every registered op passes") {
  for (const auto& r : gradcheck::run("all")) {
    CAPTURE(r.name);
    CAPTURE(r.max_relative_error);
    CHECK(r.passed());
  }
}

TEST_CASE("a corrupted derivative is reported") {
  ad::fault::corrupt_silu_derivative(true);
  const auto results = gradcheck::run("autodiff");
  ad::fault::corrupt_silu_derivative(false);
  for (const auto& r : results) {
    CAPTURE(r.name);
    CHECK(r.passed() == (r.name != "silu"));
  }
}
