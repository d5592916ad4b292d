#include "dircn/network/params.hpp"

#include <random>
#include <stdexcept>

#include "dircn/util/hash.hpp"

namespace dircn::net {

ad::DiffValue ParameterSet::create(const std::string& name, Shape shape, double bound) {
  auto value = create_filled(name, std::move(shape), 0.0);
  std::mt19937_64 rng(util::mix_seed(seed_, util::fnv1a(name)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : value.mutable_data()) v = dist(rng);
  return value;
}

ad::DiffValue ParameterSet::create_filled(const std::string& name, Shape shape, double value) {
  for (const auto& p : items_) {
    if (p.name == name) throw std::logic_error("duplicate parameter name '" + name + "'");
  }
  items_.push_back({name, ad::variable(Tensor(std::move(shape), value))});
  return items_.back().value;
}

const ad::Parameter& ParameterSet::find(const std::string& name) const {
  for (const auto& p : items_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.value.zero_grad();
}

}  // namespace dircn::net
