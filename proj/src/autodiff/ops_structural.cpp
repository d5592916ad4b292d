#include <algorithm>
#include <stdexcept>
#include <string>

#include "dircn/autodiff/ops.hpp"
#include "dircn/simd/kernels.hpp"

namespace dircn::ad {
namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void require_rank_at_least(std::string_view op, const DiffValue& x, std::size_t rank) {
  if (x.rank() < rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank >= " + std::to_string(rank) + ", got " +
                                to_string(x.shape()));
  }
}

void require_nchw(std::string_view op, const DiffValue& x) {
  if (x.rank() != 4) throw std::invalid_argument(std::string(op) + ": expected [N,C,H,W], got " + to_string(x.shape()));
}

}  // namespace

DiffValue reshape(const DiffValue& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return record(std::move(out), {x}, "reshape", [](Node& self) {
    auto& gx = self.parents[0]->accum();
    simd::active().add(gx.size(), gx.data(), self.pass_grad.data(), gx.data());
  });
}

DiffValue concat(std::span<const DiffValue> parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw std::invalid_argument("concat: axis out of range for " + to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) throw std::invalid_argument("concat: incompatible shapes " + to_string(first) + " and " + to_string(s));
    out_shape[axis] += s[axis];
  }

  const AxisSplit whole = split_at(out_shape, axis);
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.dim(axis) * whole.inner);
  const std::size_t row = whole.extent * whole.inner;

  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double* src = parts[k].value().data();
    for (std::size_t o = 0; o < whole.outer; ++o) {
      std::copy_n(src + o * widths[k], widths[k], out.data() + o * row + offset);
    }
    offset += widths[k];
  }

  std::vector<DiffValue> inputs(parts.begin(), parts.end());
  return record(std::move(out), std::move(inputs), "concat", [widths, row, outer = whole.outer](Node& self) {
    const auto& k = simd::active();
    std::size_t offset = 0;
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      Node& part = *self.parents[p];
      if (part.requires_grad) {
        auto& g = part.accum();
        for (std::size_t o = 0; o < outer; ++o) {
          k.add(widths[p], g.data() + o * widths[p], self.pass_grad.data() + o * row + offset, g.data() + o * widths[p]);
        }
      }
      offset += widths[p];
    }
  });
}

DiffValue slice(const DiffValue& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.rank() || begin >= end || end > x.dim(axis)) {
    throw std::invalid_argument("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                                std::to_string(axis) + " invalid for " + to_string(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t width = (end - begin) * s.inner;
  const std::size_t row = s.extent * s.inner;
  const std::size_t start = begin * s.inner;

  Tensor out(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.value().data() + o * row + start, width, out.data() + o * width);
  }
  return record(std::move(out), {x}, "slice", [outer = s.outer, width, row, start](Node& self) {
    const auto& k = simd::active();
    auto& g = self.parents[0]->accum();
    for (std::size_t o = 0; o < outer; ++o) {
      double* dst = g.data() + o * row + start;
      k.add(width, dst, self.pass_grad.data() + o * width, dst);
    }
  });
}

DiffValue repeat(const DiffValue& x, std::size_t axis, std::size_t n) {
  if (axis >= x.rank() || x.dim(axis) != 1 || n == 0) {
    throw std::invalid_argument("repeat: axis " + std::to_string(axis) + " of " + to_string(x.shape()) +
                                " must have extent 1");
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = n;
  Tensor out(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(x.value().data() + o * s.inner, s.inner, out.data() + (o * n + r) * s.inner);
    }
  }
  return record(std::move(out), {x}, "repeat", [outer = s.outer, inner = s.inner, n](Node& self) {
    const auto& k = simd::active();
    auto& g = self.parents[0]->accum();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t r = 0; r < n; ++r) {
        k.add(inner, g.data() + o * inner, self.pass_grad.data() + (o * n + r) * inner, g.data() + o * inner);
      }
    }
  });
}

DiffValue pad_reflect2d(const DiffValue& x, std::size_t bottom, std::size_t right) {
  require_rank_at_least("pad_reflect2d", x, 2);
  const std::size_t h = x.dim(x.rank() - 2);
  const std::size_t w = x.dim(x.rank() - 1);
  if (bottom >= h || right >= w) {
    throw std::invalid_argument("pad_reflect2d: padding (" + std::to_string(bottom) + "," + std::to_string(right) +
                                ") must be smaller than the image " + to_string(x.shape()));
  }
  if (bottom == 0 && right == 0) return x;
  const std::size_t ho = h + bottom;
  const std::size_t wo = w + right;
  const std::size_t planes = x.size() / (h * w);
  Shape out_shape = x.shape();
  out_shape[x.rank() - 2] = ho;
  out_shape[x.rank() - 1] = wo;

  auto reflect = [](std::size_t i, std::size_t n) { return i < n ? i : 2 * (n - 1) - i; };
  Tensor out(out_shape);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.value().data() + p * h * w;
    double* dst = out.data() + p * ho * wo;
    for (std::size_t r = 0; r < ho; ++r) {
      for (std::size_t c = 0; c < wo; ++c) dst[r * wo + c] = src[reflect(r, h) * w + reflect(c, w)];
    }
  }
  return record(std::move(out), {x}, "pad_reflect2d", [planes, h, w, ho, wo, reflect](Node& self) {
    auto& g = self.parents[0]->accum();
    for (std::size_t p = 0; p < planes; ++p) {
      const double* src = self.pass_grad.data() + p * ho * wo;
      double* dst = g.data() + p * h * w;
      for (std::size_t r = 0; r < ho; ++r) {
        for (std::size_t c = 0; c < wo; ++c) dst[reflect(r, h) * w + reflect(c, w)] += src[r * wo + c];
      }
    }
  });
}

DiffValue crop2d(const DiffValue& x, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  require_rank_at_least("crop2d", x, 2);
  const std::size_t hi = x.dim(x.rank() - 2);
  const std::size_t wi = x.dim(x.rank() - 1);
  if (h == 0 || w == 0 || top + h > hi || left + w > wi) {
    throw std::invalid_argument("crop2d: window " + std::to_string(h) + "x" + std::to_string(w) + " at (" +
                                std::to_string(top) + "," + std::to_string(left) + ") exceeds " + to_string(x.shape()));
  }
  if (h == hi && w == wi) return x;
  const std::size_t planes = x.size() / (hi * wi);
  Shape out_shape = x.shape();
  out_shape[x.rank() - 2] = h;
  out_shape[x.rank() - 1] = w;
  Tensor out(out_shape);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t r = 0; r < h; ++r) {
      std::copy_n(x.value().data() + (p * hi + top + r) * wi + left, w, out.data() + (p * h + r) * w);
    }
  }
  return record(std::move(out), {x}, "crop2d", [planes, hi, wi, top, left, h, w](Node& self) {
    const auto& k = simd::active();
    auto& g = self.parents[0]->accum();
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t r = 0; r < h; ++r) {
        double* dst = g.data() + (p * hi + top + r) * wi + left;
        k.add(w, dst, self.pass_grad.data() + (p * h + r) * w, dst);
      }
    }
  });
}

DiffValue sum_axis(const DiffValue& x, std::size_t axis) {
  if (axis >= x.rank()) throw std::invalid_argument("sum_axis: axis out of range for " + to_string(x.shape()));
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = 1;
  Tensor out(out_shape);
  const auto& k = simd::active();
  for (std::size_t o = 0; o < s.outer; ++o) {
    double* dst = out.data() + o * s.inner;
    for (std::size_t e = 0; e < s.extent; ++e) {
      k.add(s.inner, dst, x.value().data() + (o * s.extent + e) * s.inner, dst);
    }
  }
  return record(std::move(out), {x}, "sum_axis", [s](Node& self) {
    const auto& k = simd::active();
    auto& g = self.parents[0]->accum();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t e = 0; e < s.extent; ++e) {
        double* dst = g.data() + (o * s.extent + e) * s.inner;
        k.add(s.inner, dst, self.pass_grad.data() + o * s.inner, dst);
      }
    }
  });
}

DiffValue global_avg_pool(const DiffValue& x) {
  require_nchw("global_avg_pool", x);
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t area = x.dim(2) * x.dim(3);
  const double inv = 1.0 / static_cast<double>(area);
  Tensor out(Shape{x.dim(0), x.dim(1)});
  const auto& k = simd::active();
  for (std::size_t p = 0; p < planes; ++p) out[p] = k.sum(area, x.value().data() + p * area) * inv;
  return record(std::move(out), {x}, "global_avg_pool", [planes, area, inv](Node& self) {
    auto& g = self.parents[0]->accum();
    for (std::size_t p = 0; p < planes; ++p) {
      const double v = self.pass_grad[p] * inv;
      for (std::size_t i = 0; i < area; ++i) g[p * area + i] += v;
    }
  });
}

DiffValue scale_channels(const DiffValue& x, const DiffValue& gates) {
  require_nchw("scale_channels", x);
  if (gates.shape() != Shape{x.dim(0), x.dim(1)}) {
    throw std::invalid_argument("scale_channels: gates " + to_string(gates.shape()) + " do not match " +
                                to_string(x.shape()));
  }
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t area = x.dim(2) * x.dim(3);
  const auto& k = simd::active();
  Tensor out(x.shape());
  for (std::size_t p = 0; p < planes; ++p) {
    k.scale(area, gates.data()[p], x.value().data() + p * area, out.data() + p * area);
  }
  return record(std::move(out), {x, gates}, "scale_channels", [planes, area](Node& self) {
    const auto& k = simd::active();
    Node& x = *self.parents[0];
    Node& gates = *self.parents[1];
    for (std::size_t p = 0; p < planes; ++p) {
      const double* g = self.pass_grad.data() + p * area;
      if (x.requires_grad) k.axpy(area, gates.value[p], g, x.accum().data() + p * area);
      if (gates.requires_grad) gates.accum()[p] += k.dot(area, g, x.value.data() + p * area);
    }
  });
}

DiffValue linear(const DiffValue& x, const DiffValue& weight, const DiffValue& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || weight.dim(1) != x.dim(1) || bias.shape() != Shape{weight.dim(0)}) {
    throw std::invalid_argument("linear: input " + to_string(x.shape()) + ", weight " + to_string(weight.shape()) +
                                ", bias " + to_string(bias.shape()) + " are incompatible");
  }
  const std::size_t batch = x.dim(0);
  const std::size_t in = x.dim(1);
  const std::size_t outs = weight.dim(0);
  const auto& k = simd::active();
  Tensor out(Shape{batch, outs});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < outs; ++o) {
      out[n * outs + o] = bias.data()[o] + k.dot(in, weight.value().data() + o * in, x.value().data() + n * in);
    }
  }
  return record(std::move(out), {x, weight, bias}, "linear", [batch, in, outs](Node& self) {
    const auto& k = simd::active();
    Node& x = *self.parents[0];
    Node& w = *self.parents[1];
    Node& b = *self.parents[2];
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t o = 0; o < outs; ++o) {
        const double g = self.pass_grad[n * outs + o];
        if (x.requires_grad) k.axpy(in, g, w.value.data() + o * in, x.accum().data() + n * in);
        if (w.requires_grad) k.axpy(in, g, x.value.data() + n * in, w.accum().data() + o * in);
        if (b.requires_grad) b.accum()[o] += g;
      }
    }
  });
}

}  // namespace dircn::ad
