#pragma once

// Differentiable primitives. Shape violations throw std::invalid_argument
// naming the op and the offending shapes.

#include <optional>
#include <span>
#include <vector>

#include "dircn/autodiff/value.hpp"

namespace dircn::ad {

// Elementwise, identical shapes.
DiffValue add(const DiffValue& a, const DiffValue& b);
DiffValue sub(const DiffValue& a, const DiffValue& b);
DiffValue mul(const DiffValue& a, const DiffValue& b);
DiffValue div(const DiffValue& a, const DiffValue& b);

DiffValue add_scalar(const DiffValue& x, double s);
DiffValue mul_scalar(const DiffValue& x, double s);
// x * s where s is a one-element value (e.g. a learnable scalar).
DiffValue scale_by(const DiffValue& x, const DiffValue& s);

DiffValue square(const DiffValue& x);
// Gradient is defined as zero where the output is zero.
DiffValue sqrt(const DiffValue& x);
DiffValue abs(const DiffValue& x);
DiffValue sigmoid(const DiffValue& x);
DiffValue silu(const DiffValue& x);
DiffValue softplus(const DiffValue& x);

// Reductions to a one-element value of shape [1].
DiffValue sum(const DiffValue& x);
DiffValue mean(const DiffValue& x);
// Sums over one axis, keeping it with extent 1.
DiffValue sum_axis(const DiffValue& x, std::size_t axis);

// Structural.
DiffValue reshape(const DiffValue& x, Shape shape);
DiffValue concat(std::span<const DiffValue> parts, std::size_t axis);
DiffValue slice(const DiffValue& x, std::size_t axis, std::size_t begin, std::size_t end);
// Tiles an axis of extent 1 to extent n.
DiffValue repeat(const DiffValue& x, std::size_t axis, std::size_t n);
// Reflect-pads the last two axes (no edge repetition, like numpy "reflect").
DiffValue pad_reflect2d(const DiffValue& x, std::size_t bottom, std::size_t right);
// Crops the last two axes to [top, top+h) x [left, left+w).
DiffValue crop2d(const DiffValue& x, std::size_t top, std::size_t left, std::size_t h, std::size_t w);

// [N,C,H,W] -> [N,C]
DiffValue global_avg_pool(const DiffValue& x);
// [N,C,H,W] * gates[N,C] broadcast over H,W.
DiffValue scale_channels(const DiffValue& x, const DiffValue& gates);
// [N,in] x weight[out,in] + bias[out] -> [N,out]
DiffValue linear(const DiffValue& x, const DiffValue& weight, const DiffValue& bias);

// Cross-correlation. input [N,C_in,H,W], weight [C_out,C_in/groups,kh,kw],
// optional bias [C_out]. Kernel extents must be odd.
DiffValue conv2d(const DiffValue& input, const DiffValue& weight, const std::optional<DiffValue>& bias,
                 std::size_t groups = 1, std::size_t stride = 1, std::size_t padding = 0);

// Stride-2, 2x2 transposed convolution. input [N,C_in,H,W],
// weight [C_in,C_out,2,2], bias [C_out] -> [N,C_out,2H,2W].
DiffValue conv_transpose2d(const DiffValue& input, const DiffValue& weight, const DiffValue& bias);

// Per-(sample, channel) standardization without affine parameters.
DiffValue instance_norm(const DiffValue& x, double eps = 1e-5);

// Centered orthonormal 2D DFT over the last two axes; axis -3 must have
// extent 2 holding (real, imaginary).
DiffValue fft2c(const DiffValue& x);
DiffValue ifft2c(const DiffValue& x);

// Complex helpers over the (real, imaginary) axis at position -3, composed
// from the real primitives above.
DiffValue complex_mul(const DiffValue& a, const DiffValue& b);
DiffValue complex_conj(const DiffValue& x);
// Drops the complex axis: [..., 2, H, W] -> [..., 1, H, W].
DiffValue complex_abs(const DiffValue& x);

}  // namespace dircn::ad
