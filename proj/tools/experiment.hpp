#pragma once

// Flat key=value experiment description shared by every command: model
// preset and sizes, training schedule, mask and dataset parameters.

#include <cstdint>
#include <filesystem>
#include <string>

#include "dircn/data/dataset.hpp"
#include "dircn/network/config.hpp"
#include "dircn/training/training.hpp"
#include "dircn/util/keyvalue.hpp"

namespace dircn::cli {

class ExperimentConfig {
 public:
  // Throws std::invalid_argument for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void apply(const util::KeyValues& entries);

  static ExperimentConfig from_file(const std::filesystem::path& path);

  // Preset first, then any explicitly set model keys on top.
  net::ModelConfig model() const;
  const train::TrainConfig& training() const { return training_; }
  const data::DatasetSpec& dataset() const { return dataset_; }
  const std::string& preset_name() const { return preset_; }

  // Validates every section.
  void validate() const;

  // Every field, one per line, in a fixed order; parses back to an
  // equivalent config.
  std::string resolved_text() const;
  std::uint64_t digest() const;

 private:
  std::string preset_ = "dircn";
  util::KeyValues model_overrides_;
  train::TrainConfig training_;
  data::DatasetSpec dataset_;
};

std::string hex64(std::uint64_t v);

}  // namespace dircn::cli
