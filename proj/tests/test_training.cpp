#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "dircn/autodiff/grad_check.hpp"
#include "dircn/autodiff/ops.hpp"
#include "dircn/data/phantom.hpp"
#include "dircn/metrics/metrics.hpp"
#include "dircn/training/training.hpp"
#include "dircn/util/hash.hpp"
#include "support.hpp"

using namespace dircn;
using namespace dircn::train;

namespace {

net::ModelConfig tiny_model() {
  net::ModelConfig c;
  c.cascades = 2;
  c.levels = 2;
  c.base_channels = 4;
  c.cardinality = 2;
  c.sens_net_channels = 2;
  return net::preset("dircn", c);
}

TrainingData tiny_data(std::size_t n_train = 3, std::size_t n_val = 2) {
  TrainingData d;
  for (std::size_t i = 0; i < n_train + n_val; ++i) {
    data::PhantomSpec spec;
    spec.grid = 16;
    spec.coils = 2;
    spec.seed = 100 + i;
    Slice s{"s" + std::to_string(i), "t1", data::acquire(spec)};
    (i < n_train ? d.train : d.val).push_back(std::move(s));
  }
  return d;
}

std::uint64_t parameter_hash(const net::Dircn& model) {
  std::uint64_t h = util::kFnvOffset;
  for (const auto& p : model.parameters().items()) {
    h = util::fnv1a({reinterpret_cast<const unsigned char*>(p.value.data().data()), p.value.size() * 8}, h);
  }
  return h;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {}
  ~TempFile() { std::filesystem::remove(path); }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary | std::ios::trunc).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("reconstruction loss examples") {
  const Tensor t = test::random_tensor({1, 1, 16, 16}, 1, 0.0, 1.0);
  const auto target = ad::constant(t);
  CHECK(std::abs(reconstruction_loss(target, target, 1.0).item()) < 1e-12);

  const double c = 5.0, range = 2.0;
  Tensor shifted = t;
  for (auto& v : shifted.values()) v += c;
  const auto pred = ad::constant(shifted);
  const double structural = 0.5 * (1.0 - metrics::ssim(pred, target, range).item());
  CHECK(std::abs(reconstruction_loss(pred, target, range).item() - structural - 0.5 * c / range) < 1e-12);

  for (std::uint64_t seed = 2; seed < 8; ++seed) {
    const auto p = ad::constant(test::random_tensor({1, 1, 16, 16}, seed, -1.0, 2.0));
    CHECK(reconstruction_loss(p, target, 1.0).item() >= 0.0);
  }
  CHECK_THROWS_AS(reconstruction_loss(target, ad::constant(Tensor({1, 1, 16, 15})), 1.0), std::invalid_argument);

  auto x = test::random_variable({1, 1, 12, 12}, 9);
  CHECK(ad::grad_check([&](const std::vector<ad::DiffValue>& in) {
          return reconstruction_loss(in[0], ad::constant(test::random_tensor({1, 1, 12, 12}, 10)), 1.5);
        }, {x}, 1e-5) < 1e-5);
}

TEST_CASE("learning-rate schedule") {
  CHECK(lr_schedule(0, 0.002, 60, 0.1) == 0.002);
  CHECK(lr_schedule(60, 0.002, 60, 0.1) == doctest::Approx(0.0002).epsilon(1e-14));
  CHECK(lr_schedule(119, 0.002, 60, 0.1) == doctest::Approx(0.0002).epsilon(1e-14));
  CHECK(lr_schedule(59, 0.002, 60, 0.1) == 0.002);
  std::size_t jumps = 0;
  for (std::size_t e = 1; e < 250; ++e) jumps += lr_schedule(e, 1.0, 60, 0.1) != lr_schedule(e - 1, 1.0, 60, 0.1);
  CHECK(jumps == 250 / 60);
  CHECK_THROWS_AS(lr_schedule(1, 0.1, 0, 0.1), std::invalid_argument);
}

TEST_CASE("adam examples") {
  net::ParameterSet params;
  auto a = params.create_filled("a", {1}, 3.0);
  auto b = params.create("b", {5}, 1.0);
  Adam adam(params, false);
  const Tensor before_b = b.value();
  adam.step(params, 0.1);
  CHECK(a.item() == 3.0);
  CHECK(b.value() == before_b);

  Adam first(params, false);
  params.zero_grad();
  a.mutable_grad()[0] = 1.0;
  first.step(params, 0.1);
  CHECK(std::abs(a.item() - (3.0 - 0.1)) < 1e-8);

  net::ParameterSet p2;
  auto x = p2.create_filled("x", {3}, 0.0);
  Adam ams(p2, true);
  double last = 0.0;
  for (double g : {4.0, 2.0, 1.0, 0.5, 0.25}) {
    std::fill(x.mutable_grad().begin(), x.mutable_grad().end(), g);
    ams.step(p2, 0.01);
    const double vmax = ams.state().v_max[0][0];
    CHECK(vmax >= last);
    CHECK(vmax >= ams.state().v[0][0]);
    last = vmax;
  }
  CHECK(ams.state().step == 5);

  x.mutable_grad()[1] = std::numeric_limits<double>::quiet_NaN();
  const Tensor frozen = x.value();
  CHECK_THROWS_AS(ams.step(p2, 0.01), std::runtime_error);
  CHECK(x.value() == frozen);
  CHECK(ams.state().step == 5);
}

TEST_CASE("one adam step decreases a quadratic") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    net::ParameterSet params(seed);
    auto theta = params.create("theta", {10}, 2.0);
    for (double lr : {0.1, 0.01, 0.001}) {
      Adam adam(params);
      params.zero_grad();
      auto loss = ad::sum(ad::square(theta));
      const double before = loss.item();
      loss.backward();
      adam.step(params, lr);
      CHECK(ad::sum(ad::square(theta)).item() < before);
    }
  }
}

TEST_CASE("checkpoint round trip and corruption handling") {
  net::Dircn model(tiny_model());
  const auto data = tiny_data();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 3;
  const auto result = train::train(model, data, cfg);
  TempFile file("dircn_test_checkpoint.bin");
  save_checkpoint(result.checkpoint, file.path);
  const auto loaded = load_checkpoint(file.path);

  CHECK(loaded.model_config == result.checkpoint.model_config);
  CHECK(loaded.epoch == 1);
  CHECK(loaded.rng_state == result.checkpoint.rng_state);
  CHECK(loaded.optimizer.step == result.checkpoint.optimizer.step);
  CHECK(loaded.optimizer.m == result.checkpoint.optimizer.m);
  CHECK(loaded.optimizer.v_max == result.checkpoint.optimizer.v_max);
  REQUIRE(loaded.parameters.size() == model.parameters().items().size());
  for (std::size_t k = 0; k < loaded.parameters.size(); ++k) {
    const auto& p = model.parameters().items()[k];
    CHECK(loaded.parameters[k].name == p.name);
    CHECK(std::memcmp(loaded.parameters[k].values.data(), p.value.data().data(), p.value.size() * 8) == 0);
  }

  net::Dircn fresh(tiny_model());
  load_parameters(loaded, fresh);
  CHECK(parameter_hash(fresh) == parameter_hash(model));

  auto other_cfg = tiny_model();
  other_cfg.base_channels = 2;
  net::Dircn other(other_cfg);
  CHECK_THROWS_AS(load_parameters(loaded, other), std::invalid_argument);

  const std::string bytes = slurp(file.path);
  spit(file.path, bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(file.path), std::runtime_error);
  spit(file.path, bytes.substr(0, 10));
  CHECK_THROWS_AS(load_checkpoint(file.path), std::runtime_error);

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  spit(file.path, flipped);
  CHECK_THROWS_AS(load_checkpoint(file.path), std::runtime_error);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  spit(file.path, bad_magic);
  CHECK_THROWS_AS(load_checkpoint(file.path), std::runtime_error);

  // Future version with a valid checksum.
  std::string v2 = bytes.substr(0, bytes.size() - 8);
  v2[6] = 2;
  std::uint64_t sum = util::fnv1a(v2);
  v2.append(reinterpret_cast<const char*>(&sum), 8);
  spit(file.path, v2);
  try {
    load_checkpoint(file.path);
    FAIL("version 2 accepted");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_checkpoint(file.path.string() + ".missing"), std::runtime_error);
}

TEST_CASE("training is deterministic and resumable") {
  const auto data = tiny_data();
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 11;
  cfg.slices_per_epoch = 4;  // exceeds the pool of 3: reshuffles once

  net::Dircn a(tiny_model()), b(tiny_model());
  const auto ra = train::train(a, data, cfg);
  const auto rb = train::train(b, data, cfg);
  CHECK(ra.step_losses.size() == 8);
  CHECK(ra.step_losses == rb.step_losses);
  CHECK(parameter_hash(a) == parameter_hash(b));
  std::ostringstream csv_a, csv_b;
  write_losses_csv(csv_a, ra.epochs);
  write_losses_csv(csv_b, rb.epochs);
  CHECK(csv_a.str() == csv_b.str());
  CHECK(csv_a.str().rfind("epoch,train_loss,val_loss\n1,", 0) == 0);

  TrainConfig first = cfg;
  first.epochs = 1;
  net::Dircn c(tiny_model());
  const auto rc = train::train(c, data, first);
  TempFile file("dircn_test_resume.bin");
  save_checkpoint(rc.checkpoint, file.path);
  const auto ckpt = load_checkpoint(file.path);
  net::Dircn d(tiny_model());
  const auto rd = train::train(d, data, cfg, &ckpt);
  REQUIRE(rd.step_losses.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rd.step_losses[i] == ra.step_losses[4 + i]);
  CHECK(parameter_hash(d) == parameter_hash(a));
  CHECK(rd.epochs.back().val_loss == ra.epochs.back().val_loss);
}

TEST_CASE("zero epochs leaves initialization and validation is read-only") {
  const auto data = tiny_data();
  net::Dircn model(tiny_model());
  const net::Dircn reference(tiny_model());
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto r = train::train(model, data, cfg);
  CHECK(r.epochs.empty());
  CHECK(parameter_hash(model) == parameter_hash(reference));

  const auto before = parameter_hash(model);
  const double v1 = validate_loss(model, data.val, 0);
  CHECK(parameter_hash(model) == before);
  CHECK(validate_loss(model, data.val, 0) == v1);
  CHECK(std::isnan(validate_loss(model, {}, 4)));

  CHECK_THROWS_AS(train::train(model, TrainingData{}, cfg), std::invalid_argument);
  cfg.base_lr = -1.0;
  CHECK_THROWS_AS(train::train(model, data, cfg), std::invalid_argument);
}

TEST_CASE("diverging run aborts and keeps the last good state") {
  const auto data = tiny_data();
  net::Dircn model(tiny_model());
  const auto init = parameter_hash(model);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.base_lr = 1e300;
  const auto r = train::train(model, data, cfg);
  CHECK(r.aborted);
  CHECK(r.abort_reason.find("non-finite") != std::string::npos);
  CHECK(r.checkpoint.epoch == 0);
  CHECK(parameter_hash(model) == init);
}

TEST_CASE("a few steps on one slice reduce the loss") {
  auto data = tiny_data(1, 0);
  net::Dircn model(tiny_model());
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.acceleration = 4;
  cfg.base_lr = 0.005;
  const auto r = train::train(model, data, cfg);
  REQUIRE(r.step_losses.size() == 40);
  CHECK(r.step_losses.back() < 0.8 * r.step_losses.front());
}

TEST_CASE("sample preparation") {
  data::PhantomSpec spec;
  spec.grid = 32;
  const auto k = data::acquire(spec);
  const auto p4 = prepare(k, 4);
  CHECK(p4.mask.count() == 8);
  CHECK(p4.mask.center_end - p4.mask.center_begin == 3);
  CHECK(p4.target.shape() == Shape{32, 32});
  CHECK(p4.data_range == doctest::Approx(*std::max_element(p4.target.values().begin(), p4.target.values().end())));
  CHECK(center_fraction_for(4) == doctest::Approx(0.08));
  CHECK(center_fraction_for(8) == doctest::Approx(0.04));
}
