#include <algorithm>
#include <stdexcept>
#include <string>

#include "dircn/autodiff/ops.hpp"
#include "dircn/simd/kernels.hpp"

namespace dircn::ad {
namespace {

struct ConvGeometry {
  std::size_t batch, c_in, h, w;
  std::size_t c_out, cin_per_group, cout_per_group, kh, kw;
  std::size_t groups, stride, padding;
  std::size_t ho, wo;
};

// Output columns [lo, hi) whose input column ox*stride + kx - padding is in
// range, for unit stride.
struct ColumnRange {
  std::size_t lo, hi;
};

ColumnRange valid_columns(const ConvGeometry& g, std::size_t kx) {
  const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.padding);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(g.wo),
                                                     static_cast<std::ptrdiff_t>(g.w) - shift);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// Calls fn(oy, iy) for every output row whose tap ky lands inside the input.
template <typename Fn>
void for_valid_rows(const ConvGeometry& g, std::size_t ky, Fn fn) {
  for (std::size_t oy = 0; oy < g.ho; ++oy) {
    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
    fn(oy, static_cast<std::size_t>(iy));
  }
}

// Calls fn(ox, ix) for strided convolutions.
template <typename Fn>
void for_valid_columns_strided(const ConvGeometry& g, std::size_t kx, Fn fn) {
  for (std::size_t ox = 0; ox < g.wo; ++ox) {
    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
    fn(ox, static_cast<std::size_t>(ix));
  }
}

ConvGeometry conv_geometry(const DiffValue& input, const DiffValue& weight, const std::optional<DiffValue>& bias,
                           std::size_t groups, std::size_t stride, std::size_t padding) {
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument("conv2d: " + why + " (input " + to_string(input.shape()) + ", weight " +
                                to_string(weight.shape()) + ")");
  };
  if (input.rank() != 4) fail("input must be [N,C_in,H,W]");
  if (weight.rank() != 4) fail("weight must be [C_out,C_in/groups,kh,kw]");
  if (groups == 0 || stride == 0) fail("groups and stride must be positive");
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.c_in = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.c_out = weight.dim(0);
  g.kh = weight.dim(2);
  g.kw = weight.dim(3);
  g.groups = groups;
  g.stride = stride;
  g.padding = padding;
  if (g.c_in % groups != 0) fail("groups=" + std::to_string(groups) + " does not divide C_in=" + std::to_string(g.c_in));
  if (g.c_out % groups != 0) fail("groups=" + std::to_string(groups) + " does not divide C_out=" + std::to_string(g.c_out));
  g.cin_per_group = g.c_in / groups;
  g.cout_per_group = g.c_out / groups;
  if (weight.dim(1) != g.cin_per_group) fail("weight input channels must equal C_in/groups");
  if (g.kh % 2 == 0 || g.kw % 2 == 0) fail("kernel extents must be odd");
  if (g.h + 2 * padding < g.kh || g.w + 2 * padding < g.kw) fail("kernel larger than padded input");
  if (bias && bias->shape() != Shape{g.c_out}) fail("bias must be [C_out], got " + to_string(bias->shape()));
  g.ho = (g.h + 2 * padding - g.kh) / stride + 1;
  g.wo = (g.w + 2 * padding - g.kw) / stride + 1;
  return g;
}

void conv_forward(const ConvGeometry& g, const double* in, const double* wt, const double* bias, double* out) {
  const auto& k = simd::active();
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.ho * g.wo;
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t oc = 0; oc < g.c_out; ++oc) {
      double* dst = out + (n * g.c_out + oc) * out_plane;
      std::fill_n(dst, out_plane, bias ? bias[oc] : 0.0);
      const std::size_t group = oc / g.cout_per_group;
      for (std::size_t icl = 0; icl < g.cin_per_group; ++icl) {
        const std::size_t ic = group * g.cin_per_group + icl;
        const double* src = in + (n * g.c_in + ic) * in_plane;
        const double* taps = wt + (oc * g.cin_per_group + icl) * g.kh * g.kw;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const double wv = taps[ky * g.kw + kx];
            if (wv == 0.0) continue;
            if (g.stride == 1) {
              const auto cols = valid_columns(g, kx);
              if (cols.hi == cols.lo) continue;
              const std::size_t shift = cols.lo + kx - g.padding;
              for_valid_rows(g, ky, [&](std::size_t oy, std::size_t iy) {
                k.axpy(cols.hi - cols.lo, wv, src + iy * g.w + shift, dst + oy * g.wo + cols.lo);
              });
            } else {
              for_valid_rows(g, ky, [&](std::size_t oy, std::size_t iy) {
                for_valid_columns_strided(g, kx, [&](std::size_t ox, std::size_t ix) {
                  dst[oy * g.wo + ox] += wv * src[iy * g.w + ix];
                });
              });
            }
          }
        }
      }
    }
  }
}

void conv_backward(const ConvGeometry& g, const double* gout, const double* in, const double* wt, double* gin,
                   double* gwt, double* gbias) {
  const auto& k = simd::active();
  const std::size_t in_plane = g.h * g.w;
  const std::size_t out_plane = g.ho * g.wo;
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t oc = 0; oc < g.c_out; ++oc) {
      const double* go = gout + (n * g.c_out + oc) * out_plane;
      if (gbias) gbias[oc] += k.sum(out_plane, go);
      const std::size_t group = oc / g.cout_per_group;
      for (std::size_t icl = 0; icl < g.cin_per_group; ++icl) {
        const std::size_t ic = group * g.cin_per_group + icl;
        const double* src = in + (n * g.c_in + ic) * in_plane;
        double* gsrc = gin ? gin + (n * g.c_in + ic) * in_plane : nullptr;
        const std::size_t tap0 = (oc * g.cin_per_group + icl) * g.kh * g.kw;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const double wv = wt[tap0 + ky * g.kw + kx];
            double acc = 0.0;
            if (g.stride == 1) {
              const auto cols = valid_columns(g, kx);
              if (cols.hi == cols.lo) continue;
              const std::size_t len = cols.hi - cols.lo;
              const std::size_t shift = cols.lo + kx - g.padding;
              for_valid_rows(g, ky, [&](std::size_t oy, std::size_t iy) {
                const double* grow = go + oy * g.wo + cols.lo;
                if (gwt) acc += k.dot(len, grow, src + iy * g.w + shift);
                if (gsrc && wv != 0.0) k.axpy(len, wv, grow, gsrc + iy * g.w + shift);
              });
            } else {
              for_valid_rows(g, ky, [&](std::size_t oy, std::size_t iy) {
                for_valid_columns_strided(g, kx, [&](std::size_t ox, std::size_t ix) {
                  const double gv = go[oy * g.wo + ox];
                  acc += gv * src[iy * g.w + ix];
                  if (gsrc) gsrc[iy * g.w + ix] += wv * gv;
                });
              });
            }
            if (gwt) gwt[tap0 + ky * g.kw + kx] += acc;
          }
        }
      }
    }
  }
}

}  // namespace

DiffValue conv2d(const DiffValue& input, const DiffValue& weight, const std::optional<DiffValue>& bias,
                 std::size_t groups, std::size_t stride, std::size_t padding) {
  const ConvGeometry g = conv_geometry(input, weight, bias, groups, stride, padding);
  Tensor out(Shape{g.batch, g.c_out, g.ho, g.wo});
  conv_forward(g, input.value().data(), weight.value().data(), bias ? bias->value().data() : nullptr, out.data());

  std::vector<DiffValue> inputs{input, weight};
  if (bias) inputs.push_back(*bias);
  return record(std::move(out), std::move(inputs), "conv2d", [g](Node& self) {
    Node& in = *self.parents[0];
    Node& wt = *self.parents[1];
    Node* b = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
    conv_backward(g, self.pass_grad.data(), in.value.data(), wt.value.data(),
                  in.requires_grad ? in.accum().data() : nullptr, wt.requires_grad ? wt.accum().data() : nullptr,
                  b && b->requires_grad ? b->accum().data() : nullptr);
  });
}

DiffValue conv_transpose2d(const DiffValue& input, const DiffValue& weight, const DiffValue& bias) {
  if (input.rank() != 4 || weight.rank() != 4 || weight.dim(0) != input.dim(1) || weight.dim(2) != 2 ||
      weight.dim(3) != 2 || bias.shape() != Shape{weight.dim(1)}) {
    throw std::invalid_argument("conv_transpose2d: input " + to_string(input.shape()) + ", weight " +
                                to_string(weight.shape()) + " (expected [C_in,C_out,2,2]), bias " +
                                to_string(bias.shape()) + " are incompatible");
  }
  const std::size_t batch = input.dim(0);
  const std::size_t c_in = input.dim(1);
  const std::size_t h = input.dim(2);
  const std::size_t w = input.dim(3);
  const std::size_t c_out = weight.dim(1);
  const std::size_t ho = 2 * h;
  const std::size_t wo = 2 * w;

  Tensor out(Shape{batch, c_out, ho, wo});
  const double* in = input.value().data();
  const double* wt = weight.value().data();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t oc = 0; oc < c_out; ++oc) {
      double* dst = out.data() + (n * c_out + oc) * ho * wo;
      std::fill_n(dst, ho * wo, bias.data()[oc]);
      for (std::size_t ic = 0; ic < c_in; ++ic) {
        const double* src = in + (n * c_in + ic) * h * w;
        const double* taps = wt + (ic * c_out + oc) * 4;
        for (std::size_t y = 0; y < h; ++y) {
          double* row0 = dst + (2 * y) * wo;
          double* row1 = row0 + wo;
          for (std::size_t x = 0; x < w; ++x) {
            const double v = src[y * w + x];
            row0[2 * x] += taps[0] * v;
            row0[2 * x + 1] += taps[1] * v;
            row1[2 * x] += taps[2] * v;
            row1[2 * x + 1] += taps[3] * v;
          }
        }
      }
    }
  }

  return record(std::move(out), {input, weight, bias}, "conv_transpose2d",
                [batch, c_in, c_out, h, w, ho, wo](Node& self) {
                  Node& input = *self.parents[0];
                  Node& weight = *self.parents[1];
                  Node& bias = *self.parents[2];
                  const auto& k = simd::active();
                  double* gin = input.requires_grad ? input.accum().data() : nullptr;
                  double* gwt = weight.requires_grad ? weight.accum().data() : nullptr;
                  double* gb = bias.requires_grad ? bias.accum().data() : nullptr;
                  for (std::size_t n = 0; n < batch; ++n) {
                    for (std::size_t oc = 0; oc < c_out; ++oc) {
                      const double* go = self.pass_grad.data() + (n * c_out + oc) * ho * wo;
                      if (gb) gb[oc] += k.sum(ho * wo, go);
                      for (std::size_t ic = 0; ic < c_in; ++ic) {
                        const double* src = input.value.data() + (n * c_in + ic) * h * w;
                        const double* taps = weight.value.data() + (ic * c_out + oc) * 4;
                        double acc[4] = {0.0, 0.0, 0.0, 0.0};
                        for (std::size_t y = 0; y < h; ++y) {
                          const double* row0 = go + (2 * y) * wo;
                          const double* row1 = row0 + wo;
                          for (std::size_t x = 0; x < w; ++x) {
                            const double g00 = row0[2 * x], g01 = row0[2 * x + 1];
                            const double g10 = row1[2 * x], g11 = row1[2 * x + 1];
                            const double v = src[y * w + x];
                            acc[0] += g00 * v;
                            acc[1] += g01 * v;
                            acc[2] += g10 * v;
                            acc[3] += g11 * v;
                            if (gin) {
                              gin[(n * c_in + ic) * h * w + y * w + x] +=
                                  taps[0] * g00 + taps[1] * g01 + taps[2] * g10 + taps[3] * g11;
                            }
                          }
                        }
                        if (gwt) {
                          for (int t = 0; t < 4; ++t) gwt[(ic * c_out + oc) * 4 + t] += acc[t];
                        }
                      }
                    }
                  }
                });
}

}  // namespace dircn::ad
