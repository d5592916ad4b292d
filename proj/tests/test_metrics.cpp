#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "dircn/autodiff/grad_check.hpp"
#include "dircn/autodiff/ops.hpp"
#include "dircn/metrics/metrics.hpp"
#include "support.hpp"

using namespace dircn;
using namespace dircn::metrics;

namespace {

// Direct windowed evaluation, no convolution machinery.
double ssim_oracle(const Tensor& x, const Tensor& y, std::size_t h, std::size_t w, double range) {
  const int n = 11;
  double g[n], total = 0.0;
  for (int i = 0; i < n; ++i) total += g[i] = std::exp(-(i - 5) * (i - 5) / (2 * 1.5 * 1.5));
  for (double& v : g) v /= total;
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double acc = 0.0;
  for (std::size_t i = 0; i + n <= h; ++i) {
    for (std::size_t j = 0; j + n <= w; ++j) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double wt = g[a] * g[b];
          const double xv = x[(i + a) * w + j + b], yv = y[(i + a) * w + j + b];
          mx += wt * xv;
          my += wt * yv;
          sxx += wt * xv * xv;
          syy += wt * yv * yv;
          sxy += wt * xv * yv;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return acc / static_cast<double>((h - n + 1) * (w - n + 1));
}

Tensor scaled(const Tensor& t, double a) {
  Tensor out = t;
  for (auto& v : out.values()) v *= a;
  return out;
}

}  // namespace

TEST_CASE("ssim agrees with direct window evaluation") {
  const Tensor x = test::random_tensor({20, 17}, 1, 0.0, 1.0);
  Tensor y = x;
  const Tensor noise = test::random_tensor({20, 17}, 2, -0.2, 0.2);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += noise[i];
  CHECK(std::abs(ssim(x, y, 1.0) - ssim_oracle(x, y, 20, 17, 1.0)) < 1e-12);
}

TEST_CASE("ssim examples and properties") {
  const Tensor x = test::random_tensor({24, 24}, 3, 0.0, 1.0);
  CHECK(std::abs(ssim(x, x, 1.0) - 1.0) < 1e-12);

  const Tensor y = test::random_tensor({24, 24}, 4, 0.0, 1.0);
  CHECK(std::abs(ssim(x, y, 1.0) - ssim(y, x, 1.0)) < 1e-12);

  Tensor bumped = x;
  bumped[100] += 1e-3;
  CHECK(ssim(x, bumped, 1.0) < 1.0);

  for (double a : {0.01, 3.0, 250.0}) {
    CHECK(std::abs(ssim(scaled(x, a), scaled(y, a), a) - ssim(x, y, 1.0)) < 1e-9);
  }
  CHECK_THROWS_AS(ssim(x, Tensor({24, 23}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ssim(x, y, 0.0), std::invalid_argument);

  // Small images fall back to a smaller odd window.
  const Tensor small = test::random_tensor({7, 8}, 5, 0.0, 1.0);
  CHECK(std::abs(ssim(small, small, 1.0) - 1.0) < 1e-12);
}

TEST_CASE("ssim is differentiable") {
  auto x = test::random_variable({1, 1, 13, 12}, 6);
  const auto y = ad::constant(test::random_tensor({1, 1, 13, 12}, 7));
  // Corner pixels only see the window tails (gradients near 1e-8), so a
  // larger step keeps the finite difference above rounding noise.
  CHECK(ad::grad_check([&](const std::vector<ad::DiffValue>& in) { return ssim(in[0], y, 2.0); }, {x}, 1e-4) < 1e-5);
}

TEST_CASE("nmse and psnr") {
  const Tensor x = test::random_tensor({9, 9}, 8);
  CHECK(nmse(x, x) == 0.0);
  CHECK(nmse(Tensor({9, 9}), x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(nmse(scaled(x, 2.0), x) == doctest::Approx(1.0).epsilon(1e-15));
  const Tensor y = test::random_tensor({9, 9}, 9);
  CHECK(std::abs(nmse(scaled(y, 7.0), scaled(x, 7.0)) - nmse(y, x)) < 1e-12);
  CHECK_THROWS_AS(nmse(x, Tensor({9, 9})), std::invalid_argument);

  CHECK(psnr(x, x, 1.0) == std::numeric_limits<double>::infinity());
  Tensor zero({100}), tenth({100}, 0.1);
  CHECK(psnr(tenth, zero, 1.0) == doctest::Approx(20.0).epsilon(1e-12));
  Tensor one({4}, 1.0);
  CHECK(psnr(one, Tensor({4}), 255.0) == doctest::Approx(48.1308036).epsilon(1e-8));

  double last = std::numeric_limits<double>::infinity();
  for (double e : {0.001, 0.01, 0.05, 0.3, 1.0}) {
    const double p = psnr(Tensor({10}, e), Tensor({10}), 1.0);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("aggregate groups by contrast and overall") {
  const std::vector<SliceMetrics> recs = {
      {"a", "t1", 0.9, 0.01, 30}, {"b", "t2", 0.8, 0.02, 25}, {"c", "t1", 0.7, 0.03, 20}, {"d", "pd", 0.6, 0.04, 15}};
  const auto r = aggregate(recs);
  REQUIRE(r.groups.size() == 4);
  CHECK(r.groups[0].group == "t1");
  CHECK(r.groups[1].group == "t2");
  CHECK(r.groups[2].group == "pd");
  CHECK(r.group("t1").count == 2);
  CHECK(r.group("t1").ssim == doctest::Approx(0.8));
  CHECK(r.group("ALL").count == 4);
  CHECK(r.group("ALL").ssim == doctest::Approx(0.75));
  CHECK(r.group("ALL").psnr == doctest::Approx(22.5));
  CHECK_THROWS_AS(r.group("flair"), std::out_of_range);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);

  std::ostringstream rows, summary;
  write_records_csv(rows, r.records);
  write_summary_csv(summary, "zf", r);
  CHECK(rows.str().rfind("id,contrast,ssim,nmse,psnr\n", 0) == 0);
  CHECK(summary.str().find("zf,ALL,4,") != std::string::npos);
}

TEST_CASE("reference table ratios reproduce the quoted improvements") {
  // ALL rows of the ablation table: baseline vs full model.
  const GroupSummary base4{"ALL", 0, 0.9560, 0.0041, 40.4}, full4{"ALL", 0, 0.9594, 0.0035, 41.1};
  const GroupSummary base8{"ALL", 0, 0.9395, 0.0088, 37.0}, full8{"ALL", 0, 0.9460, 0.0068, 38.2};
  const auto r4 = consistency_check(base4, full4);
  const auto r8 = consistency_check(base8, full8);
  CHECK(std::round(r4.dissimilarity_reduction * 1000) / 10 == doctest::Approx(7.7));
  CHECK(std::round(r8.dissimilarity_reduction * 1000) / 10 == doctest::Approx(10.7));
  CHECK(std::round(r8.nmse_reduction * 1000) / 10 == doctest::Approx(22.7));
  CHECK(std::lround(r4.dissimilarity_reduction * 100) == 8);
  CHECK(std::lround(r8.dissimilarity_reduction * 100) == 11);
  CHECK(std::lround(r8.nmse_reduction * 100) == 23);
}
