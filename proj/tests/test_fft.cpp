#include <complex>

#include "doctest.h"
#include "dircn/autodiff/ops.hpp"
#include "support.hpp"

using namespace dircn;
using namespace dircn::ad;

namespace {

std::vector<std::complex<double>> as_complex(const Tensor& t) {
  const std::size_t plane = t.dim(t.rank() - 1) * t.dim(t.rank() - 2);
  std::vector<std::complex<double>> out(plane);
  for (std::size_t i = 0; i < plane; ++i) out[i] = {t[i], t[plane + i]};
  return out;
}

}  // namespace

TEST_CASE("fft2c matches a direct DFT on odd, even and prime grids") {
  const std::pair<std::size_t, std::size_t> grids[] = {{4, 4}, {5, 7}, {6, 9}, {1, 8}, {11, 3}};
  std::uint64_t seed = 1;
  for (auto [h, w] : grids) {
    CAPTURE(h);
    CAPTURE(w);
    const Tensor x = test::random_tensor({2, h, w}, seed++);
    const auto expected = test::naive_centered_dft(h, w, as_complex(x), false);
    const auto got = as_complex(fft2c(constant(x)).value());
    const auto expected_inv = test::naive_centered_dft(h, w, as_complex(x), true);
    const auto got_inv = as_complex(ifft2c(constant(x)).value());
    for (std::size_t i = 0; i < h * w; ++i) {
      CHECK(std::abs(got[i] - expected[i]) < 1e-12);
      CHECK(std::abs(got_inv[i] - expected_inv[i]) < 1e-12);
    }
  }
}

TEST_CASE("centered impulse transforms to a real constant") {
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {7, 10}, {48, 100}}) {
    Tensor x({2, h, w});
    x[(h / 2) * w + w / 2] = 1.0;
    auto y = fft2c(constant(x));
    const double c = 1.0 / std::sqrt(static_cast<double>(h * w));
    for (std::size_t i = 0; i < h * w; ++i) {
      CHECK(std::abs(y.data()[i] - c) < 1e-12);
      CHECK(std::abs(y.data()[h * w + i]) < 1e-12);
    }
  }
}

TEST_CASE("round trip, Parseval and linearity") {
  const Tensor x = test::random_tensor({3, 2, 32, 32}, 7);
  const Tensor z = test::random_tensor({3, 2, 32, 32}, 8);
  auto fx = fft2c(constant(x));
  CHECK(test::max_abs_diff(ifft2c(fx).data(), x.values()) < 1e-10);
  CHECK(std::abs(test::l2(fx.data()) - test::l2(x.values())) < 1e-10);

  const double a = 0.7, b = -2.3;
  auto lhs = fft2c(add(mul_scalar(constant(x), a), mul_scalar(constant(z), b)));
  auto rhs = add(mul_scalar(fx, a), mul_scalar(fft2c(constant(z)), b));
  CHECK(test::max_abs_diff(lhs.data(), rhs.data()) < 1e-10);
}

TEST_CASE("fft2c backward applies the inverse transform") {
  auto x = test::random_variable({1, 2, 6, 5}, 9);
  const Tensor seed = test::random_tensor({1, 2, 6, 5}, 10);
  fft2c(x).backward(seed);
  auto expected = ifft2c(constant(seed));
  CHECK(test::max_abs_diff(x.grad(), expected.data()) < 1e-14);
}

TEST_CASE("fft2c rejects inputs without a complex axis") {
  CHECK_THROWS_AS(fft2c(constant(Tensor({3, 4, 4}))), std::invalid_argument);
  CHECK_THROWS_AS(ifft2c(constant(Tensor({4, 4}))), std::invalid_argument);
}

TEST_CASE("fft2c matches a direct DFT across many shapes") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> side(1, 24);
  for (int t = 0; t < 40; ++t) {
    const std::size_t h = side(rng), w = side(rng);
    CAPTURE(h);
    CAPTURE(w);
    const Tensor x = test::random_tensor({3, 2, h, w}, 100 + t);
    const Tensor y = fft2c(constant(x)).value();
    const Tensor z = ifft2c(constant(x)).value();
    for (std::size_t c = 0; c < 3; ++c) {
      const Tensor xc = Tensor({2, h, w}, {x.storage().begin() + c * 2 * h * w, x.storage().begin() + (c + 1) * 2 * h * w});
      const auto fwd = test::naive_centered_dft(h, w, as_complex(xc), false);
      const auto inv = test::naive_centered_dft(h, w, as_complex(xc), true);
      const std::size_t base = c * 2 * h * w;
      for (std::size_t i = 0; i < h * w; ++i) {
        CHECK(std::abs(std::complex<double>(y[base + i], y[base + h * w + i]) - fwd[i]) < 1e-12);
        CHECK(std::abs(std::complex<double>(z[base + i], z[base + h * w + i]) - inv[i]) < 1e-12);
      }
    }
  }
}
