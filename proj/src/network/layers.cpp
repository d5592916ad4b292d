#include "dircn/network/layers.hpp"

#include <algorithm>
#include <cmath>

#include "dircn/autodiff/ops.hpp"

namespace dircn::net {
namespace {

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

}  // namespace

Conv::Conv(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
           bool with_bias, std::size_t groups, std::size_t stride)
    : groups_(groups), stride_(stride), padding_(kernel / 2) {
  const std::size_t fan_in = in / groups * kernel * kernel;
  weight = params.create(name + ".weight", {out, in / groups, kernel, kernel}, fan_in_bound(fan_in));
  if (with_bias) bias = params.create(name + ".bias", {out}, fan_in_bound(fan_in));
}

ad::DiffValue Conv::operator()(const ad::DiffValue& x) const {
  return ad::conv2d(x, weight, bias, groups_, stride_, padding_);
}

UpConv::UpConv(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out) {
  const double b = fan_in_bound(out * 4);
  weight = params.create(name + ".weight", {in, out, 2, 2}, b);
  bias = params.create(name + ".bias", {out}, b);
}

ad::DiffValue UpConv::operator()(const ad::DiffValue& x) const { return ad::conv_transpose2d(x, weight, bias); }

SqueezeExcite::SqueezeExcite(ParameterSet& params, const std::string& name, std::size_t channels, std::size_t ratio) {
  const std::size_t hidden = std::max<std::size_t>(1, channels / ratio);
  w1 = params.create(name + ".fc1.weight", {hidden, channels}, fan_in_bound(channels));
  b1 = params.create(name + ".fc1.bias", {hidden}, fan_in_bound(channels));
  w2 = params.create(name + ".fc2.weight", {channels, hidden}, fan_in_bound(hidden));
  b2 = params.create(name + ".fc2.bias", {channels}, fan_in_bound(hidden));
}

ad::DiffValue SqueezeExcite::operator()(const ad::DiffValue& x) const {
  const auto squeezed = ad::silu(ad::linear(ad::global_avg_pool(x), w1, b1));
  return ad::scale_channels(x, ad::sigmoid(ad::linear(squeezed, w2, b2)));
}

// Convolutions feeding instance norm carry no bias; it would be normalized away.
Block::Block(ParameterSet& params, const std::string& name, SubnetKind kind, std::size_t in, std::size_t out,
             std::size_t cardinality, std::size_t se_ratio)
    : kind_(kind) {
  conv1_ = Conv(params, name + ".conv1", in, out, 3, false);
  if (kind == SubnetKind::ResXUNet) {
    conv2_ = Conv(params, name + ".conv2", out, out, 3, false, cardinality);
    se_ = SqueezeExcite(params, name + ".se", out, se_ratio);
    if (in != out) shortcut_ = Conv(params, name + ".shortcut", in, out, 1, false);
  } else {
    conv2_ = Conv(params, name + ".conv2", out, out, 3, false);
  }
}

ad::DiffValue Block::operator()(const ad::DiffValue& x) const {
  auto h = ad::silu(ad::instance_norm(conv1_(x)));
  h = ad::instance_norm(conv2_(h));
  if (kind_ == SubnetKind::PlainUNet) return ad::silu(h);
  h = (*se_)(h);
  return ad::silu(ad::add(h, shortcut_ ? (*shortcut_)(x) : x));
}

}  // namespace dircn::net
