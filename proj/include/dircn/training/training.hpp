#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "dircn/data/dataset.hpp"
#include "dircn/mri/mri.hpp"
#include "dircn/network/dircn.hpp"

namespace dircn::train {

// 0.5 (1 - ssim) + 0.5 mean|pred - target| / data_range, on [1, 1, H, W].
ad::DiffValue reconstruction_loss(const ad::DiffValue& pred, const ad::DiffValue& target, double data_range);

// base_lr * gamma^floor(epoch / step_size)
double lr_schedule(std::size_t epoch, double base_lr, std::size_t step_size, double gamma);

struct OptimizerState {
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool amsgrad = true;
  std::vector<std::vector<double>> m, v, v_max;  // mirror the parameter list
};

class Adam {
 public:
  explicit Adam(const net::ParameterSet& params, bool amsgrad = true);

  // One update from the parameters' accumulated gradients. A non-finite
  // gradient throws std::runtime_error before anything is modified.
  void step(net::ParameterSet& params, double lr);

  OptimizerState& state() { return state_; }
  const OptimizerState& state() const { return state_; }

 private:
  OptimizerState state_;
};

// Centre fraction used with acceleration R: 0.08 at 4x, 0.04 at 8x.
double center_fraction_for(int acceleration);

struct Prepared {
  mri::MultiCoilKSpace k_u;
  mri::SamplingMask mask;
  Tensor target;  // [s, s]
  double data_range = 0.0;
};

Prepared prepare(const mri::MultiCoilKSpace& k_full, int acceleration, std::size_t offset = 0);

struct Slice {
  std::string id;
  std::string contrast;
  mri::MultiCoilKSpace k_full;
};

struct TrainingData {
  std::vector<Slice> train, val;
};

TrainingData load_training_data(const data::DatasetManifest& manifest);
std::vector<Slice> load_split(const data::DatasetManifest& manifest, data::Split split);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t slices_per_epoch = 0;  // 0: every training slice once
  int acceleration = 0;              // 0: uniform over {4, 8}
  std::uint64_t seed = 1;
  double base_lr = 0.002;
  std::size_t lr_step = 60;
  double lr_gamma = 0.1;
  bool amsgrad = true;
};

void validate(const TrainConfig& config);

struct NamedBlob {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::string model_config;  // net::to_text form
  std::uint64_t epoch = 0;
  std::string rng_state;
  OptimizerState optimizer;
  std::vector<NamedBlob> parameters;

  std::uint64_t config_digest() const;
};

Checkpoint capture(const net::Dircn& model, const Adam& optimizer, const std::mt19937_64& rng, std::uint64_t epoch);
// Throws std::invalid_argument when the checkpoint belongs to another model.
void restore(const Checkpoint& ckpt, net::Dircn& model, Adam& optimizer, std::mt19937_64& rng);
// Parameters only.
void load_parameters(const Checkpoint& ckpt, net::Dircn& model);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws std::runtime_error on truncation, corruption or version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::vector<double> step_losses;
  bool aborted = false;
  std::string abort_reason;
  Checkpoint checkpoint;  // last completed epoch (the last good state when aborted)
};

// Called after every epoch with the current log and checkpoint.
using EpochCallback = std::function<void(const EpochLog&, const Checkpoint&)>;

// Trains until `config.epochs` epochs are complete. With `resume` the run
// continues from the checkpoint's epoch, model, optimizer and RNG state.
TrainResult train(net::Dircn& model, const TrainingData& data, const TrainConfig& config,
                  const Checkpoint* resume = nullptr, const EpochCallback& on_epoch = {});

// Mean loss over the validation slices; never modifies parameters.
double validate_loss(const net::Dircn& model, const std::vector<Slice>& slices, int acceleration);

void write_losses_csv(std::ostream& out, const std::vector<EpochLog>& epochs);

}  // namespace dircn::train
