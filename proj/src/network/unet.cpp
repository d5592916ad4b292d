#include "dircn/network/unet.hpp"

#include <stdexcept>

#include "dircn/autodiff/ops.hpp"

namespace dircn::net {

UNet::UNet(ParameterSet& params, const std::string& name, const UNetSpec& spec) : spec_(spec) {
  if (spec.levels < 1) throw std::invalid_argument("unet: levels must be >= 1");
  const std::size_t groups = spec.kind == SubnetKind::ResXUNet ? spec.cardinality : 1;
  const std::size_t bottom = spec.levels - 1;
  const std::size_t extra = spec.accepts_injection ? 1 : 0;
  for (std::size_t l = 0; l < spec.levels; ++l) {
    std::size_t in = l == 0 ? spec.in_channels : channels(l);
    if (l == bottom) in += extra * channels(l);
    if (l > 0) down_.emplace_back(params, name + ".down" + std::to_string(l), channels(l - 1), channels(l), 3, true, 1, 2);
    encoder_.emplace_back(params, name + ".enc" + std::to_string(l), spec.kind, in, channels(l), groups, spec.se_ratio);
  }
  for (std::size_t l = 0; l < bottom; ++l) {
    up_.emplace_back(params, name + ".up" + std::to_string(l), channels(l + 1), channels(l));
    decoder_.emplace_back(params, name + ".dec" + std::to_string(l), spec.kind, (2 + extra) * channels(l), channels(l),
                          groups, spec.se_ratio);
  }
  head_ = Conv(params, name + ".head", channels(0), spec.out_channels, 1, true);
}

std::vector<Shape> UNet::feature_shapes(std::size_t n, std::size_t h, std::size_t w) const {
  const std::size_t m = multiple();
  const std::size_t hp = (h + m - 1) / m * m, wp = (w + m - 1) / m * m;
  std::vector<Shape> out;
  for (std::size_t l = 0; l < spec_.levels; ++l) out.push_back({n, channels(l), hp >> l, wp >> l});
  return out;
}

UNet::Output UNet::forward(const ad::DiffValue& x, const std::vector<ad::DiffValue>* injected) const {
  if (x.rank() != 4 || x.dim(1) != spec_.in_channels) {
    throw std::invalid_argument("unet: expected [N," + std::to_string(spec_.in_channels) + ",H,W], got " +
                                dircn::to_string(x.shape()));
  }
  const std::size_t h = x.dim(2), w = x.dim(3), m = multiple();
  const std::size_t pad_h = (m - h % m) % m, pad_w = (m - w % m) % m;
  if (pad_h >= h || pad_w >= w) {
    throw std::invalid_argument("unet: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                                " is too small to pad to a multiple of " + std::to_string(m) + " (required by " +
                                std::to_string(spec_.levels) + " levels)");
  }
  if (spec_.accepts_injection != (injected != nullptr)) {
    throw std::invalid_argument(spec_.accepts_injection ? "unet: injected features required"
                                                        : "unet: this network takes no injected features");
  }
  if (injected) {
    const auto shapes = feature_shapes(x.dim(0), h, w);
    if (injected->size() != shapes.size()) throw std::invalid_argument("unet: one injected map per level required");
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      if ((*injected)[l].shape() != shapes[l]) {
        throw std::invalid_argument("unet: injected map " + std::to_string(l) + " has shape " +
                                    dircn::to_string((*injected)[l].shape()) + ", expected " + dircn::to_string(shapes[l]));
      }
    }
  }

  const ad::DiffValue input = (pad_h || pad_w) ? ad::pad_reflect2d(x, pad_h, pad_w) : x;
  const std::size_t bottom = spec_.levels - 1;
  std::vector<ad::DiffValue> skips(spec_.levels);
  Output out;
  out.harvested.resize(spec_.levels);

  ad::DiffValue cur = input;
  for (std::size_t l = 0; l < spec_.levels; ++l) {
    if (l > 0) cur = down_[l - 1](cur);
    if (l == bottom && injected) {
      const ad::DiffValue parts[] = {cur, (*injected)[l]};
      cur = ad::concat(parts, 1);
    }
    cur = encoder_[l](cur);
    skips[l] = cur;
  }
  out.harvested[bottom] = cur;
  for (std::size_t l = bottom; l-- > 0;) {
    const auto up = up_[l](cur);
    std::vector<ad::DiffValue> parts = {up, skips[l]};
    if (injected) parts.push_back((*injected)[l]);
    cur = decoder_[l](ad::concat(parts, 1));
    out.harvested[l] = cur;
  }
  out.y = head_(cur);
  if (pad_h || pad_w) out.y = ad::crop2d(out.y, 0, 0, h, w);
  return out;
}

}  // namespace dircn::net
