#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "dircn/autodiff/ops.hpp"
#include "dircn/training/training.hpp"

namespace dircn::train {
namespace {

double slice_loss(const net::Dircn& model, const Slice& slice, int acceleration, ad::DiffValue* keep = nullptr) {
  const auto prep = prepare(slice.k_full, acceleration);
  const auto pred = model.forward(prep.k_u, prep.mask);
  const Tensor target = prep.target.reshaped({1, 1, prep.target.dim(0), prep.target.dim(1)});
  auto loss = reconstruction_loss(pred, ad::constant(target), prep.data_range);
  if (keep) *keep = loss;
  return loss.item();
}

int validation_acceleration(int fixed, std::size_t index) {
  if (fixed) return fixed;
  return index % 2 == 0 ? 4 : 8;
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.acceleration != 0 && c.acceleration < 1) {
    throw std::invalid_argument("train: acceleration must be 0 (random 4/8) or >= 1");
  }
  if (!(c.base_lr > 0.0)) throw std::invalid_argument("train: base_lr must be positive");
  if (c.lr_step == 0) throw std::invalid_argument("train: lr_step must be positive");
  if (!(c.lr_gamma > 0.0)) throw std::invalid_argument("train: lr_gamma must be positive");
}

std::vector<Slice> load_split(const data::DatasetManifest& manifest, data::Split split) {
  std::vector<Slice> out;
  for (const auto& id : manifest.ids(split)) {
    auto s = data::load_slice(manifest, id);
    out.push_back({id, s.contrast, std::move(s.k_full)});
  }
  return out;
}

TrainingData load_training_data(const data::DatasetManifest& manifest) {
  return {load_split(manifest, data::Split::Train), load_split(manifest, data::Split::Val)};
}

double validate_loss(const net::Dircn& model, const std::vector<Slice>& slices, int acceleration) {
  if (slices.empty()) return std::numeric_limits<double>::quiet_NaN();
  ad::NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t i = 0; i < slices.size(); ++i) total += slice_loss(model, slices[i], validation_acceleration(acceleration, i));
  return total / static_cast<double>(slices.size());
}

TrainResult train(net::Dircn& model, const TrainingData& data, const TrainConfig& config, const Checkpoint* resume,
                  const EpochCallback& on_epoch) {
  validate(config);
  if (data.train.empty()) throw std::invalid_argument("train: no training slices");
  Adam optimizer(model.parameters(), config.amsgrad);
  std::mt19937_64 rng(config.seed);
  std::size_t epoch = 0;
  if (resume) {
    restore(*resume, model, optimizer, rng);
    epoch = resume->epoch;
  }

  TrainResult result;
  result.checkpoint = capture(model, optimizer, rng, epoch);
  auto abort = [&](std::string reason) {
    result.aborted = true;
    result.abort_reason = std::move(reason);
    load_parameters(result.checkpoint, model);
    return result;
  };

  const std::size_t n = data.train.size();
  const std::size_t per_epoch = config.slices_per_epoch ? config.slices_per_epoch : n;
  for (; epoch < config.epochs; ++epoch) {
    // Without replacement; the pool is reshuffled only once exhausted.
    std::vector<std::size_t> order;
    while (order.size() < per_epoch) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      order.insert(order.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, per_epoch - order.size())));
    }
    const double lr = lr_schedule(epoch, config.base_lr, config.lr_step, config.lr_gamma);
    double total = 0.0;
    for (std::size_t idx : order) {
      const int accel = config.acceleration ? config.acceleration
                                            : (std::uniform_int_distribution<int>(0, 1)(rng) ? 8 : 4);
      model.parameters().zero_grad();
      ad::DiffValue loss;
      const double value = slice_loss(model, data.train[idx], accel, &loss);
      if (!std::isfinite(value)) {
        return abort("non-finite loss at epoch " + std::to_string(epoch + 1) + " on slice " + data.train[idx].id);
      }
      loss.backward();
      try {
        optimizer.step(model.parameters(), lr);
      } catch (const std::runtime_error& e) {
        return abort(e.what());
      }
      result.step_losses.push_back(value);
      total += value;
    }
    EpochLog log{epoch + 1, total / static_cast<double>(order.size()), validate_loss(model, data.val, config.acceleration)};
    result.epochs.push_back(log);
    result.checkpoint = capture(model, optimizer, rng, epoch + 1);
    if (on_epoch) on_epoch(log, result.checkpoint);
  }
  model.parameters().zero_grad();
  return result;
}

void write_losses_csv(std::ostream& out, const std::vector<EpochLog>& epochs) {
  out << "epoch,train_loss,val_loss\n" << std::setprecision(17);
  for (const auto& e : epochs) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
}

}  // namespace dircn::train
