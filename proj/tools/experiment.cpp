#include "experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dircn/util/hash.hpp"

namespace dircn::cli {

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  using namespace util;
  net::ModelConfig probe;
  if (key == "preset") {
    net::preset(value);
    preset_ = value;
  } else if (apply_model_key(probe, key, value)) {
    std::erase_if(model_overrides_, [&](const auto& kv) { return kv.first == key; });
    model_overrides_.emplace_back(key, value);
  } else if (key == "epochs") {
    training_.epochs = parse_size(key, value);
  } else if (key == "slices_per_epoch") {
    training_.slices_per_epoch = parse_size(key, value);
  } else if (key == "acceleration") {
    training_.acceleration = parse_int(key, value);
  } else if (key == "seed") {
    training_.seed = parse_u64(key, value);
  } else if (key == "base_lr") {
    training_.base_lr = parse_double(key, value);
  } else if (key == "lr_step") {
    training_.lr_step = parse_size(key, value);
  } else if (key == "lr_gamma") {
    training_.lr_gamma = parse_double(key, value);
  } else if (key == "amsgrad") {
    training_.amsgrad = parse_bool(key, value);
  } else if (key == "data_slices") {
    dataset_.slices = parse_size(key, value);
  } else if (key == "grid") {
    dataset_.grid = parse_size(key, value);
  } else if (key == "coils") {
    dataset_.coils = parse_size(key, value);
  } else if (key == "ellipses") {
    dataset_.ellipses = parse_size(key, value);
  } else if (key == "noise") {
    dataset_.noise_sigma = parse_double(key, value);
  } else if (key == "data_seed") {
    dataset_.seed = parse_u64(key, value);
  } else if (key == "train_fraction") {
    dataset_.train_fraction = parse_double(key, value);
  } else if (key == "val_fraction") {
    dataset_.val_fraction = parse_double(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::apply(const util::KeyValues& entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  ExperimentConfig c;
  try {
    c.apply(util::parse_key_values(text.str()));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return c;
}

net::ModelConfig ExperimentConfig::model() const {
  net::ModelConfig c = net::preset(preset_);
  for (const auto& [k, v] : model_overrides_) net::apply_model_key(c, k, v);
  return c;
}

void ExperimentConfig::validate() const {
  net::validate(model());
  train::validate(training_);
  data::validate(dataset_);
}

std::string ExperimentConfig::resolved_text() const {
  using util::format_double;
  std::ostringstream out;
  out << "preset = " << preset_ << "\n" << net::to_text(model());
  const auto& t = training_;
  out << "epochs = " << t.epochs << "\n"
      << "slices_per_epoch = " << t.slices_per_epoch << "\n"
      << "acceleration = " << t.acceleration << "\n"
      << "seed = " << t.seed << "\n"
      << "base_lr = " << format_double(t.base_lr) << "\n"
      << "lr_step = " << t.lr_step << "\n"
      << "lr_gamma = " << format_double(t.lr_gamma) << "\n"
      << "amsgrad = " << (t.amsgrad ? "true" : "false") << "\n";
  const auto& d = dataset_;
  out << "data_slices = " << d.slices << "\n"
      << "grid = " << d.grid << "\n"
      << "coils = " << d.coils << "\n"
      << "ellipses = " << d.ellipses << "\n"
      << "noise = " << format_double(d.noise_sigma) << "\n"
      << "data_seed = " << d.seed << "\n"
      << "train_fraction = " << format_double(d.train_fraction) << "\n"
      << "val_fraction = " << format_double(d.val_fraction) << "\n";
  return out.str();
}

std::uint64_t ExperimentConfig::digest() const { return util::fnv1a(resolved_text()); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace dircn::cli
