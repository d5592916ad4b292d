#pragma once

#include <optional>
#include <string>

#include "dircn/autodiff/value.hpp"
#include "dircn/network/config.hpp"
#include "dircn/network/params.hpp"

namespace dircn::net {

class Conv {
 public:
  Conv() = default;
  Conv(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, std::size_t kernel,
       bool bias, std::size_t groups = 1, std::size_t stride = 1);
  ad::DiffValue operator()(const ad::DiffValue& x) const;

  ad::DiffValue weight;
  std::optional<ad::DiffValue> bias;

 private:
  std::size_t groups_ = 1, stride_ = 1, padding_ = 0;
};

// 2x2 stride-2 upsampling.
class UpConv {
 public:
  UpConv() = default;
  UpConv(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out);
  ad::DiffValue operator()(const ad::DiffValue& x) const;

  ad::DiffValue weight, bias;
};

// Channel gating: x * sigmoid(W2 silu(W1 pool(x) + b1) + b2).
class SqueezeExcite {
 public:
  SqueezeExcite() = default;
  SqueezeExcite(ParameterSet& params, const std::string& name, std::size_t channels, std::size_t ratio);
  ad::DiffValue operator()(const ad::DiffValue& x) const;

  ad::DiffValue w1, b1, w2, b2;
};

// ResXUNet: conv-IN-SiLU, grouped conv-IN, squeeze-excite, shortcut add, SiLU.
// Plain: conv-IN-SiLU twice.
class Block {
 public:
  Block() = default;
  Block(ParameterSet& params, const std::string& name, SubnetKind kind, std::size_t in, std::size_t out,
        std::size_t cardinality, std::size_t se_ratio);
  ad::DiffValue operator()(const ad::DiffValue& x) const;

 private:
  SubnetKind kind_ = SubnetKind::PlainUNet;
  Conv conv1_, conv2_;
  std::optional<Conv> shortcut_;
  std::optional<SqueezeExcite> se_;
};

}  // namespace dircn::net
