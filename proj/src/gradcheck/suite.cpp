#include "dircn/gradcheck/suite.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "dircn/autodiff/grad_check.hpp"
#include "dircn/autodiff/ops.hpp"
#include "dircn/data/phantom.hpp"
#include "dircn/metrics/metrics.hpp"
#include "dircn/network/dircn.hpp"
#include "dircn/training/training.hpp"

namespace dircn::gradcheck {
namespace {

using ad::DiffValue;
using Inputs = std::vector<DiffValue>;

constexpr double kOpTolerance = 1e-5;
constexpr double kEndToEndTolerance = 1e-4;

Tensor uniform(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

DiffValue var(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return ad::variable(uniform(std::move(shape), seed, lo, hi));
}

// Projects an arbitrary output onto a fixed random direction.
DiffValue project(const DiffValue& v) {
  return ad::sum(ad::mul(v, ad::constant(uniform(v.shape(), 7919 + v.size()))));
}

using Check = std::function<double(const Shape&, std::uint64_t)>;

double check(const std::function<DiffValue(const Inputs&)>& f, const Inputs& in, double step = 1e-5) {
  return ad::grad_check(f, in, step);
}

struct Entry {
  std::string name;
  std::string module;
  double tolerance;
  std::function<double()> run;
};

// Each op is probed on three shapes; channels stay even for grouped conv.
const Shape kShapes[] = {{1, 2, 4, 4}, {2, 2, 5, 3}, {1, 4, 6, 8}};

Entry op(std::string name, Check c) {
  return {std::move(name), "autodiff", kOpTolerance, [c] {
            double worst = 0.0;
            std::uint64_t seed = 1;
            for (const Shape& s : kShapes) worst = std::max(worst, c(s, seed += 16));
            return worst;
          }};
}

std::vector<Entry> autodiff_entries() {
  using namespace ad;
  std::vector<Entry> e;
  auto unary = [](DiffValue (*f)(const DiffValue&), bool positive) -> Check {
    return [f, positive](const Shape& s, std::uint64_t seed) {
      return check([f](const Inputs& in) { return project(f(in[0])); },
                   {positive ? var(s, seed, 0.5, 2.0) : var(s, seed)});
    };
  };
  auto binary = [](DiffValue (*f)(const DiffValue&, const DiffValue&), bool positive_rhs) -> Check {
    return [f, positive_rhs](const Shape& s, std::uint64_t seed) {
      return check([f](const Inputs& in) { return project(f(in[0], in[1])); },
                   {var(s, seed), positive_rhs ? var(s, seed + 1, 0.5, 2.0) : var(s, seed + 1)});
    };
  };
  e.push_back(op("add", binary(add, false)));
  e.push_back(op("sub", binary(sub, false)));
  e.push_back(op("mul", binary(mul, false)));
  e.push_back(op("div", binary(div, true)));
  e.push_back(op("add_scalar", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(add_scalar(in[0], 0.3)); }, {var(s, seed)});
  }));
  e.push_back(op("mul_scalar", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(mul_scalar(in[0], -1.7)); }, {var(s, seed)});
  }));
  e.push_back(op("scale_by", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(scale_by(in[0], in[1])); }, {var(s, seed), var({1}, seed + 1)});
  }));
  e.push_back(op("square", unary(square, false)));
  e.push_back(op("sqrt", unary(ad::sqrt, true)));
  e.push_back(op("abs", unary(ad::abs, true)));
  e.push_back(op("sigmoid", unary(sigmoid, false)));
  e.push_back(op("silu", unary(silu, false)));
  e.push_back(op("softplus", unary(softplus, false)));
  e.push_back(op("sum", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return square(sum(in[0])); }, {var(s, seed)});
  }));
  e.push_back(op("mean", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return square(mean(in[0])); }, {var(s, seed)});
  }));
  e.push_back(op("sum_axis", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(square(sum_axis(in[0], 1))); }, {var(s, seed)});
  }));
  e.push_back(op("reshape", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(reshape(in[0], {in[0].size()})); }, {var(s, seed)});
  }));
  e.push_back(op("concat", [](const Shape& s, std::uint64_t seed) {
    return check(
        [](const Inputs& in) {
          const DiffValue parts[] = {in[0], in[1]};
          return project(concat(parts, 1));
        },
        {var(s, seed), var(s, seed + 1)});
  }));
  e.push_back(op("slice", [](const Shape& s, std::uint64_t seed) {
    return check([c = s[1]](const Inputs& in) { return project(slice(in[0], 1, 1, c)); }, {var(s, seed)});
  }));
  e.push_back(op("repeat", [](const Shape& s, std::uint64_t seed) {
    Shape one = s;
    one[1] = 1;
    return check([](const Inputs& in) { return project(repeat(in[0], 1, 3)); }, {var(one, seed)});
  }));
  e.push_back(op("pad_reflect2d", [](const Shape& s, std::uint64_t seed) {
    return check([h = s[2], w = s[3]](const Inputs& in) { return project(pad_reflect2d(in[0], h - 1, w - 1)); },
                 {var(s, seed)});
  }));
  e.push_back(op("crop2d", [](const Shape& s, std::uint64_t seed) {
    return check([h = s[2], w = s[3]](const Inputs& in) { return project(crop2d(in[0], 1, 1, h - 2, w - 1)); },
                 {var(s, seed)});
  }));
  e.push_back(op("global_avg_pool", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(global_avg_pool(in[0])); }, {var(s, seed)});
  }));
  e.push_back(op("scale_channels", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(scale_channels(in[0], in[1])); },
                 {var(s, seed), var({s[0], s[1]}, seed + 1)});
  }));
  e.push_back(op("linear", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(linear(in[0], in[1], in[2])); },
                 {var({s[0], s[1] * s[2]}, seed), var({3, s[1] * s[2]}, seed + 1), var({3}, seed + 2)});
  }));
  e.push_back(op("conv2d", [](const Shape& s, std::uint64_t seed) {
    const double grouped = check([](const Inputs& in) { return project(conv2d(in[0], in[1], in[2], 2, 1, 1)); },
                                 {var(s, seed), var({4, s[1] / 2, 3, 3}, seed + 1, -0.5, 0.5), var({4}, seed + 2)});
    const double strided = check([](const Inputs& in) { return project(conv2d(in[0], in[1], std::nullopt, 1, 2, 1)); },
                                 {var(s, seed + 3), var({3, s[1], 3, 3}, seed + 4, -0.5, 0.5)});
    return std::max(grouped, strided);
  }));
  e.push_back(op("conv_transpose2d", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(conv_transpose2d(in[0], in[1], in[2])); },
                 {var(s, seed), var({s[1], 3, 2, 2}, seed + 1, -0.5, 0.5), var({3}, seed + 2)});
  }));
  e.push_back(op("instance_norm", [](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(instance_norm(in[0])); }, {var(s, seed)});
  }));
  auto complex_shape = [](const Shape& s) { return Shape{s[0], 2, s[2], s[3]}; };
  e.push_back(op("fft2c", [complex_shape](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(fft2c(in[0])); }, {var(complex_shape(s), seed)});
  }));
  e.push_back(op("ifft2c", [complex_shape](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(ifft2c(in[0])); }, {var(complex_shape(s), seed)});
  }));
  e.push_back(op("complex_mul", [complex_shape](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(complex_mul(in[0], in[1])); },
                 {var(complex_shape(s), seed), var(complex_shape(s), seed + 1)});
  }));
  e.push_back(op("complex_conj", [complex_shape](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(complex_conj(in[0])); }, {var(complex_shape(s), seed)});
  }));
  e.push_back(op("complex_abs", [complex_shape](const Shape& s, std::uint64_t seed) {
    return check([](const Inputs& in) { return project(complex_abs(in[0])); }, {var(complex_shape(s), seed)});
  }));
  return e;
}

struct Sample {
  mri::MultiCoilKSpace k_u;
  mri::SamplingMask mask;
};

Sample sample(std::size_t grid, std::size_t coils, std::uint64_t seed) {
  data::PhantomSpec spec;
  spec.grid = grid;
  spec.coils = coils;
  spec.seed = seed;
  auto mask = mri::make_equispaced_mask(grid, 4, 0.125);
  return {mri::preprocess(data::acquire(spec), mask).undersampled, mask};
}

std::vector<Entry> network_entries() {
  std::vector<Entry> e;
  auto add = [&e](std::string name, double tol, std::function<double()> f) {
    e.push_back({std::move(name), "network", tol, std::move(f)});
  };
  add("coil_reduce", kOpTolerance, [] {
    const auto maps = ad::constant(data::generate_sensitivities(3, 8, 5).data);
    return check([maps](const Inputs& in) { return project(mri::diff::coil_reduce(in[0], maps)); },
                 {var({3, 2, 8, 8}, 1)});
  });
  add("coil_expand", kOpTolerance, [] {
    return check([](const Inputs& in) { return project(mri::diff::coil_expand(in[0], in[1])); },
                 {var({1, 2, 8, 6}, 2), var({3, 2, 8, 6}, 3)});
  });
  add("rss", kOpTolerance, [] {
    return check([](const Inputs& in) { return project(mri::diff::rss(in[0])); }, {var({3, 2, 7, 8}, 4)});
  });
  add("data_consistency", kOpTolerance, [] {
    const auto s = sample(16, 2, 5);
    return check(
        [&s](const Inputs& in) {
          return project(net::data_consistency(in[0], s.k_u.data, s.mask, ad::softplus(in[1])));
        },
        {var({2, 2, 16, 16}, 6), var({1}, 7)});
  });
  // With the full 11-tap window the border pixels carry gradients near
  // 1e-8 and the finite difference is roundoff-limited, so the window is
  // probed at shrunk sizes; reconstruction_loss covers the 11-tap path.
  add("ssim", kOpTolerance, [] {
    double worst = 0.0;
    for (std::size_t side : {7, 9}) {
      const auto target = ad::constant(uniform({1, 1, side, side + 1}, 8, 0.0, 1.0));
      worst = std::max(worst, check([target](const Inputs& in) { return metrics::ssim(in[0], target, 1.0); },
                                    {var({1, 1, side, side + 1}, 9, 0.0, 1.0)}, 1e-4));
    }
    return worst;
  });
  add("reconstruction_loss", kOpTolerance, [] {
    const auto target = ad::constant(uniform({1, 1, 12, 12}, 10, 0.0, 1.0));
    return check([target](const Inputs& in) { return train::reconstruction_loss(in[0], target, 1.5); },
                 {var({1, 1, 12, 12}, 11, 0.0, 1.0)}, 1e-4);
  });
  add("dircn_end_to_end", kEndToEndTolerance, [] {
    net::ModelConfig c;
    c.cascades = 2;
    c.levels = 2;
    c.base_channels = 4;
    c.cardinality = 2;
    const net::Dircn model(net::preset("dircn", c));
    const auto s = sample(16, 4, 12);
    Inputs params;
    for (const auto& p : model.parameters().items()) params.push_back(p.value);
    return ad::grad_check_detailed([&](const Inputs&) { return project(model.forward(s.k_u, s.mask)); }, params,
                                   1e-5, 4)
        .max_relative_error;
  });
  return e;
}

std::vector<Entry> entries(const std::string& module) {
  if (module != "all" && module != "autodiff" && module != "network") {
    throw std::invalid_argument("gradcheck: unknown module '" + module + "' (all|autodiff|network)");
  }
  std::vector<Entry> out;
  if (module != "network") out = autodiff_entries();
  if (module != "autodiff") {
    auto more = network_entries();
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

}  // namespace

std::vector<std::string> registered(const std::string& module) {
  std::vector<std::string> names;
  for (const auto& e : entries(module)) names.push_back(e.name);
  return names;
}

std::vector<CheckResult> run(const std::string& module, const std::function<void(const CheckResult&)>& on_result) {
  std::vector<CheckResult> results;
  for (const auto& e : entries(module)) {
    CheckResult r{e.name, e.module, e.run(), e.tolerance};
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace dircn::gradcheck
