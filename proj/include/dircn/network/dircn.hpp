#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dircn/mri/mri.hpp"
#include "dircn/network/config.hpp"
#include "dircn/network/params.hpp"
#include "dircn/network/unet.hpp"

namespace dircn::net {

// Soft data consistency on [coils, 2, nx, ny] k-space. Kept lines become
// (k_u + lambda k_p) / (1 + lambda), computed as
// k_u + lambda/(1+lambda) (k_p - k_u); dropped lines pass k_p through.
// `lambda` is a one-element value; differentiable in k_p and lambda.
ad::DiffValue data_consistency(const ad::DiffValue& k_p, const Tensor& k_u, const mri::SamplingMask& mask,
                               const ad::DiffValue& lambda);

// softplus(raw) == value
double inverse_softplus(double value);

struct CascadeState {
  ad::DiffValue kspace;                // current prediction [c, 2, H, W]
  std::vector<ad::DiffValue> history;  // coil-reduced images, oldest first
  std::vector<ad::DiffValue> features; // harvested maps of the previous sub-network
};

struct ForwardTrace {
  std::vector<std::size_t> subnet_input_channels;     // per cascade
  std::vector<std::vector<Shape>> injected_shapes;    // per cascade, empty without interconnections
  std::vector<bool> injected_all_zero;                // per cascade
};

class Dircn {
 public:
  explicit Dircn(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParameterSet& parameters() { return *params_; }
  const ParameterSet& parameters() const { return *params_; }

  // Unit-RSS maps [c, 2, H, W] from the fully sampled centre of k_u.
  ad::DiffValue estimate_sensitivities(const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask) const;

  // Runs cascade `index` (0-based) and advances `state`.
  void cascade_forward(CascadeState& state, std::size_t index, const ad::DiffValue& maps,
                       const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask,
                       ForwardTrace* trace = nullptr) const;

  // Magnitude image [1, 1, H, W].
  ad::DiffValue forward(const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask,
                        ForwardTrace* trace = nullptr) const;

  // forward() without graph recording, as an [H, W] tensor.
  Tensor reconstruct(const mri::MultiCoilKSpace& k_u, const mri::SamplingMask& mask) const;

  ad::DiffValue lambda(std::size_t cascade) const;
  const UNet& subnet(std::size_t cascade) const { return cascades_.at(cascade).net; }

 private:
  struct Cascade {
    UNet net;
    ad::DiffValue lambda_raw;
  };

  ModelConfig config_;
  std::unique_ptr<ParameterSet> params_;
  std::unique_ptr<UNet> sens_net_;
  std::vector<Cascade> cascades_;
};

}  // namespace dircn::net
