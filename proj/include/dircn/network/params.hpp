#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dircn/autodiff/value.hpp"

namespace dircn::net {

// Ordered registry of trainable tensors with hierarchical dotted names.
// Initial values depend only on (seed, name), not on creation order.
class ParameterSet {
 public:
  explicit ParameterSet(std::uint64_t seed = 0) : seed_(seed) {}
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;

  // Uniform(-bound, bound) initialization.
  ad::DiffValue create(const std::string& name, Shape shape, double bound);
  ad::DiffValue create_filled(const std::string& name, Shape shape, double value);

  const std::vector<ad::Parameter>& items() const { return items_; }
  std::vector<ad::Parameter>& items() { return items_; }
  const ad::Parameter& find(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::uint64_t seed_;
  std::vector<ad::Parameter> items_;
};

}  // namespace dircn::net
