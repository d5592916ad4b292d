#include <cmath>
#include <stdexcept>
#include <string>

#include "dircn/autodiff/fault.hpp"
#include "dircn/autodiff/ops.hpp"
#include "dircn/simd/kernels.hpp"

namespace dircn::ad {
namespace {

void require_same_shape(std::string_view op, const DiffValue& a, const DiffValue& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
  }
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <typename Fn>
Tensor map(const DiffValue& x, Fn fn) {
  Tensor out(x.shape());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  return out;
}

}  // namespace

DiffValue add(const DiffValue& a, const DiffValue& b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  simd::active().add(out.size(), a.value().data(), b.value().data(), out.data());
  return record(std::move(out), {a, b}, "add", [](Node& self) {
    const auto& k = simd::active();
    for (auto& p : self.parents) {
      if (p->requires_grad) k.add(self.pass_grad.size(), p->accum().data(), self.pass_grad.data(), p->accum().data());
    }
  });
}

DiffValue sub(const DiffValue& a, const DiffValue& b) {
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return record(std::move(out), {a, b}, "sub", [](Node& self) {
    const auto& k = simd::active();
    const auto n = self.pass_grad.size();
    if (self.parents[0]->requires_grad) {
      auto& ga = self.parents[0]->accum();
      k.add(n, ga.data(), self.pass_grad.data(), ga.data());
    }
    if (self.parents[1]->requires_grad) k.axpy(n, -1.0, self.pass_grad.data(), self.parents[1]->accum().data());
  });
}

DiffValue mul(const DiffValue& a, const DiffValue& b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  simd::active().mul(out.size(), a.value().data(), b.value().data(), out.data());
  return record(std::move(out), {a, b}, "mul", [](Node& self) {
    const auto& k = simd::active();
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    const auto n = self.pass_grad.size();
    if (a.requires_grad) k.mul_acc(n, self.pass_grad.data(), b.value.data(), a.accum().data());
    if (b.requires_grad) k.mul_acc(n, self.pass_grad.data(), a.value.data(), b.accum().data());
  });
}

DiffValue div(const DiffValue& a, const DiffValue& b) {
  require_same_shape("div", a, b);
  Tensor out(a.shape());
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / y[i];
  return record(std::move(out), {a, b}, "div", [](Node& self) {
    Node& a = *self.parents[0];
    Node& b = *self.parents[1];
    const auto& g = self.pass_grad;
    if (a.requires_grad) {
      auto& ga = a.accum();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / b.value[i];
    }
    if (b.requires_grad) {
      auto& gb = b.accum();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * self.value[i] / b.value[i];
    }
  });
}

DiffValue add_scalar(const DiffValue& x, double s) {
  Tensor out = map(x, [s](double v) { return v + s; });
  return record(std::move(out), {x}, "add_scalar", [](Node& self) {
    auto& gx = self.parents[0]->accum();
    simd::active().add(gx.size(), gx.data(), self.pass_grad.data(), gx.data());
  });
}

DiffValue mul_scalar(const DiffValue& x, double s) {
  Tensor out(x.shape());
  simd::active().scale(out.size(), s, x.value().data(), out.data());
  return record(std::move(out), {x}, "mul_scalar", [s](Node& self) {
    simd::active().axpy(self.pass_grad.size(), s, self.pass_grad.data(), self.parents[0]->accum().data());
  });
}

DiffValue scale_by(const DiffValue& x, const DiffValue& s) {
  if (s.size() != 1) throw std::invalid_argument("scale_by: factor of shape " + to_string(s.shape()) + " is not scalar");
  Tensor out(x.shape());
  simd::active().scale(out.size(), s.data()[0], x.value().data(), out.data());
  return record(std::move(out), {x, s}, "scale_by", [](Node& self) {
    const auto& k = simd::active();
    Node& x = *self.parents[0];
    Node& s = *self.parents[1];
    const auto n = self.pass_grad.size();
    if (x.requires_grad) k.axpy(n, s.value[0], self.pass_grad.data(), x.accum().data());
    if (s.requires_grad) s.accum()[0] += k.dot(n, self.pass_grad.data(), x.value.data());
  });
}

DiffValue square(const DiffValue& x) {
  Tensor out(x.shape());
  simd::active().mul(out.size(), x.value().data(), x.value().data(), out.data());
  return record(std::move(out), {x}, "square", [](Node& self) {
    Node& x = *self.parents[0];
    auto& gx = x.accum();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * x.value[i] * self.pass_grad[i];
  });
}

DiffValue sqrt(const DiffValue& x) {
  Tensor out = map(x, [](double v) { return std::sqrt(v); });
  return record(std::move(out), {x}, "sqrt", [](Node& self) {
    auto& gx = self.parents[0]->accum();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (self.value[i] > 0.0) gx[i] += 0.5 * self.pass_grad[i] / self.value[i];
    }
  });
}

DiffValue abs(const DiffValue& x) {
  Tensor out = map(x, [](double v) { return std::abs(v); });
  return record(std::move(out), {x}, "abs", [](Node& self) {
    Node& x = *self.parents[0];
    auto& gx = x.accum();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = x.value[i];
      gx[i] += v > 0.0 ? self.pass_grad[i] : (v < 0.0 ? -self.pass_grad[i] : 0.0);
    }
  });
}

DiffValue sigmoid(const DiffValue& x) {
  Tensor out = map(x, logistic);
  return record(std::move(out), {x}, "sigmoid", [](Node& self) {
    auto& gx = self.parents[0]->accum();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double s = self.value[i];
      gx[i] += self.pass_grad[i] * s * (1.0 - s);
    }
  });
}

DiffValue silu(const DiffValue& x) {
  Tensor out = map(x, [](double v) { return v * logistic(v); });
  return record(std::move(out), {x}, "silu", [](Node& self) {
    Node& x = *self.parents[0];
    auto& gx = x.accum();
    const bool corrupt = fault::silu_derivative_corrupted();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = x.value[i];
      const double s = logistic(v);
      const double d = corrupt ? s : s + v * s * (1.0 - s);
      gx[i] += self.pass_grad[i] * d;
    }
  });
}

DiffValue softplus(const DiffValue& x) {
  Tensor out = map(x, [](double v) { return std::log1p(std::exp(-std::abs(v))) + std::max(v, 0.0); });
  return record(std::move(out), {x}, "softplus", [](Node& self) {
    Node& x = *self.parents[0];
    auto& gx = x.accum();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.pass_grad[i] * logistic(x.value[i]);
  });
}

DiffValue sum(const DiffValue& x) {
  Tensor out(Shape{1}, simd::active().sum(x.size(), x.value().data()));
  return record(std::move(out), {x}, "sum", [](Node& self) {
    const double g = self.pass_grad[0];
    for (auto& v : self.parents[0]->accum()) v += g;
  });
}

DiffValue mean(const DiffValue& x) {
  if (x.size() == 0) throw std::invalid_argument("mean: empty input");
  const double inv = 1.0 / static_cast<double>(x.size());
  Tensor out(Shape{1}, simd::active().sum(x.size(), x.value().data()) * inv);
  return record(std::move(out), {x}, "mean", [inv](Node& self) {
    const double g = self.pass_grad[0] * inv;
    for (auto& v : self.parents[0]->accum()) v += g;
  });
}

}  // namespace dircn::ad
