#include <stdexcept>
#include <string>

#include "dircn/autodiff/fft.hpp"
#include "dircn/autodiff/ops.hpp"

namespace dircn::ad {
namespace {

void transform_all(const Shape& shape, const double* in, double* out, bool inverse) {
  const std::size_t r = shape.size();
  const std::size_t h = shape[r - 2];
  const std::size_t w = shape[r - 1];
  const std::size_t plane = h * w;
  const std::size_t images = numel(shape) / (2 * plane);
  for (std::size_t i = 0; i < images; ++i) {
    const std::size_t base = 2 * i * plane;
    fft::centered_2d(h, w, in + base, in + base + plane, out + base, out + base + plane, inverse);
  }
}

DiffValue transform(const DiffValue& x, bool inverse) {
  const char* op = inverse ? "ifft2c" : "fft2c";
  if (x.rank() < 3 || x.dim(x.rank() - 3) != 2) {
    throw std::invalid_argument(std::string(op) + ": expected [...,2,H,W] with a (real, imaginary) axis, got " +
                                to_string(x.shape()));
  }
  if (x.dim(x.rank() - 1) == 0 || x.dim(x.rank() - 2) == 0) {
    throw std::invalid_argument(std::string(op) + ": empty image " + to_string(x.shape()));
  }
  Tensor out(x.shape());
  transform_all(x.shape(), x.value().data(), out.data(), inverse);
  // The transform is unitary, so its adjoint is its inverse.
  return record(std::move(out), {x}, op, [inverse](Node& self) {
    std::vector<double> g(self.pass_grad.size());
    transform_all(self.value.shape(), self.pass_grad.data(), g.data(), !inverse);
    auto& gx = self.parents[0]->accum();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

std::size_t complex_axis(std::string_view op, const DiffValue& x) {
  if (x.rank() < 3 || x.dim(x.rank() - 3) != 2) {
    throw std::invalid_argument(std::string(op) + ": expected [...,2,H,W], got " + to_string(x.shape()));
  }
  return x.rank() - 3;
}

}  // namespace

DiffValue fft2c(const DiffValue& x) { return transform(x, false); }
DiffValue ifft2c(const DiffValue& x) { return transform(x, true); }

DiffValue complex_mul(const DiffValue& a, const DiffValue& b) {
  const std::size_t axis = complex_axis("complex_mul", a);
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("complex_mul: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const DiffValue ar = slice(a, axis, 0, 1), ai = slice(a, axis, 1, 2);
  const DiffValue br = slice(b, axis, 0, 1), bi = slice(b, axis, 1, 2);
  const DiffValue parts[2] = {sub(mul(ar, br), mul(ai, bi)), add(mul(ar, bi), mul(ai, br))};
  return concat(parts, axis);
}

DiffValue complex_conj(const DiffValue& x) {
  const std::size_t axis = complex_axis("complex_conj", x);
  const DiffValue parts[2] = {slice(x, axis, 0, 1), mul_scalar(slice(x, axis, 1, 2), -1.0)};
  return concat(parts, axis);
}

DiffValue complex_abs(const DiffValue& x) {
  const std::size_t axis = complex_axis("complex_abs", x);
  return sqrt(sum_axis(square(x), axis));
}

}  // namespace dircn::ad
