#pragma once

#include <string>
#include <vector>

#include "dircn/network/layers.hpp"

namespace dircn::net {

struct UNetSpec {
  SubnetKind kind = SubnetKind::ResXUNet;
  std::size_t in_channels = 2;
  std::size_t out_channels = 2;
  std::size_t base_channels = 8;
  std::size_t levels = 3;
  std::size_t cardinality = 1;
  std::size_t se_ratio = 4;
  bool accepts_injection = false;
};

// U-shaped sub-network. Level l runs at 1/2^l resolution with
// base_channels * 2^l channels. Inputs whose spatial size is not a multiple
// of 2^(levels-1) are reflect-padded at the bottom/right and the output is
// cropped back.
class UNet {
 public:
  UNet(ParameterSet& params, const std::string& name, const UNetSpec& spec);

  struct Output {
    ad::DiffValue y;
    // Final feature map per level (after its block), on the padded grid.
    std::vector<ad::DiffValue> harvested;
  };

  // `injected` must hold one map per level matching feature_shapes() when
  // the spec accepts injection, and must be null otherwise.
  Output forward(const ad::DiffValue& x, const std::vector<ad::DiffValue>* injected = nullptr) const;

  std::size_t channels(std::size_t level) const { return spec_.base_channels << level; }
  std::vector<Shape> feature_shapes(std::size_t n, std::size_t h, std::size_t w) const;
  const UNetSpec& spec() const { return spec_; }

 private:
  std::size_t multiple() const { return std::size_t{1} << (spec_.levels - 1); }

  UNetSpec spec_;
  std::vector<Block> encoder_;      // levels-1 entries, then the bottom block
  std::vector<Conv> down_;          // down_[l-1]: level l-1 -> l
  std::vector<UpConv> up_;          // up_[l]: level l+1 -> l
  std::vector<Block> decoder_;      // decoder_[l] for l < levels-1
  Conv head_;
};

}  // namespace dircn::net
