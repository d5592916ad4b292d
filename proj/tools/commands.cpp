#include "commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dircn/autodiff/fault.hpp"
#include "dircn/gradcheck/suite.hpp"
#include "dircn/metrics/metrics.hpp"
#include "dircn/util/hash.hpp"
#include "experiment.hpp"
#include "image.hpp"

namespace dircn::cli {
namespace fs = std::filesystem;
namespace {

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// Flags that mirror config keys are recorded in order and applied after
// the config file, so the command line wins.
void config_flag(CLI::App* app, const std::string& flag, const std::string& key, util::KeyValues& sink,
          const std::string& help) {
  app->add_option_function<std::string>(flag, [&sink, key](const std::string& v) { sink.emplace_back(key, v); }, help)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

ExperimentConfig resolve(const std::string& config_path, const util::KeyValues& overrides) {
  ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(config_path);
  c.apply(overrides);
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

struct LoadedModel {
  train::Checkpoint checkpoint;
  std::unique_ptr<net::Dircn> model;
};

LoadedModel load_model(const std::string& path, const std::string& config_path) {
  LoadedModel m;
  m.checkpoint = train::load_checkpoint(path);
  const auto config = net::model_config_from_text(m.checkpoint.model_config);
  if (!config_path.empty()) {
    const auto expected = ExperimentConfig::from_file(config_path).model();
    if (net::to_text(expected) != net::to_text(config)) {
      throw std::invalid_argument("checkpoint " + path + " was trained with a different model config than " +
                                  config_path);
    }
  }
  m.model = std::make_unique<net::Dircn>(config);
  train::load_parameters(m.checkpoint, *m.model);
  return m;
}

// generate-data ---------------------------------------------------------

struct GenerateArgs {
  std::string config, out;
  bool force = false;
  util::KeyValues overrides;
};

int generate_data(Context& ctx, const GenerateArgs& a) {
  const auto cfg = resolve(a.config, a.overrides);
  const fs::path dir = a.out;
  if (fs::exists(dir) && !(fs::is_directory(dir) && fs::is_empty(dir)) && !a.force) {
    throw std::invalid_argument(dir.string() + " already exists (pass --force to overwrite)");
  }
  fs::create_directories(dir);
  const auto manifest = data::build_dataset(cfg.dataset(), dir);
  write_text(dir / "config.resolved", cfg.resolved_text());
  const auto& d = cfg.dataset();
  ctx.out << "config digest " << hex64(cfg.digest()) << "\n"
          << "dataset " << dir.string() << ": " << manifest.slices.size() << " slices (train "
          << manifest.ids(data::Split::Train).size() << ", val " << manifest.ids(data::Split::Val).size() << ", test "
          << manifest.ids(data::Split::Test).size() << "), grid " << d.grid << ", coils " << d.coils << "\n"
          << "manifest digest " << hex64(manifest.digest()) << "\n";
  return 0;
}

// train -------------------------------------------------------------------

struct TrainArgs {
  std::string config, data, out;
  util::KeyValues overrides;
};

int train_cmd(Context& ctx, const TrainArgs& a) {
  const auto cfg = resolve(a.config, a.overrides);
  const auto manifest = data::read_manifest(a.data);
  const auto samples = train::load_training_data(manifest);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_text(dir / "config.resolved", cfg.resolved_text());

  net::Dircn model(cfg.model());
  ctx.out << "config digest " << hex64(cfg.digest()) << "\n"
          << "preset " << cfg.preset_name() << ", parameters " << model.parameters().scalar_count() << "\n"
          << "train slices " << samples.train.size() << ", val slices " << samples.val.size() << "\n";

  const auto& tc = cfg.training();
  std::vector<train::EpochLog> logs;
  auto on_epoch = [&](const train::EpochLog& log, const train::Checkpoint& ckpt) {
    logs.push_back(log);
    ctx.out << "epoch " << log.epoch << " lr " << train::lr_schedule(log.epoch - 1, tc.base_lr, tc.lr_step, tc.lr_gamma)
            << " train_loss " << std::setprecision(6) << log.train_loss << " val_loss " << log.val_loss << std::endl;
    std::ostringstream csv;
    train::write_losses_csv(csv, logs);
    write_text(dir / "losses.csv", csv.str());
    train::save_checkpoint(ckpt, dir / "checkpoint.bin");
  };
  const auto result = train::train(model, samples, tc, nullptr, on_epoch);
  train::save_checkpoint(result.checkpoint, dir / "checkpoint.bin");
  if (logs.empty()) {
    std::ostringstream csv;
    train::write_losses_csv(csv, logs);
    write_text(dir / "losses.csv", csv.str());
  }
  if (result.aborted) {
    ctx.err << "error: training aborted: " << result.abort_reason << "; checkpoint.bin holds epoch "
            << result.checkpoint.epoch << "\n";
    return 2;
  }
  ctx.out << "checkpoint " << (dir / "checkpoint.bin").string() << "\n";
  return 0;
}

// evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string checkpoint, data, split = "test", csv, config;
  int accel = 4;
};

void print_summary(std::ostream& out, const std::string& method, const metrics::MetricReport& report) {
  for (const auto& g : report.groups) {
    out << std::left << std::setw(12) << method << std::setw(7) << g.group << std::right << std::setw(5) << g.count
        << std::fixed << std::setprecision(4) << "  ssim " << g.ssim << "  nmse " << g.nmse << "  psnr "
        << std::setprecision(2) << g.psnr << std::defaultfloat << "\n";
  }
}

int evaluate(Context& ctx, const EvaluateArgs& a) {
  if (a.accel != 4 && a.accel != 8) throw std::invalid_argument("--accel must be 4 or 8");
  const auto loaded = load_model(a.checkpoint, a.config);
  const auto manifest = data::read_manifest(a.data);
  const auto slices = train::load_split(manifest, data::parse_split(a.split));
  if (slices.empty()) throw std::invalid_argument("split '" + a.split + "' has no slices");

  std::vector<metrics::SliceMetrics> model_rows, zf_rows;
  for (const auto& s : slices) {
    const auto p = train::prepare(s.k_full, a.accel);
    const Tensor recon = loaded.model->reconstruct(p.k_u, p.mask);
    const Tensor zf = mri::zero_filled(p.k_u);
    model_rows.push_back({s.id, s.contrast, metrics::ssim(recon, p.target, p.data_range),
                          metrics::nmse(recon, p.target), metrics::psnr(recon, p.target, p.data_range)});
    zf_rows.push_back({s.id, s.contrast, metrics::ssim(zf, p.target, p.data_range), metrics::nmse(zf, p.target),
                       metrics::psnr(zf, p.target, p.data_range)});
  }

  const fs::path csv = a.csv.empty() ? fs::path(a.checkpoint).parent_path() / "metrics.csv" : fs::path(a.csv);
  fs::path summary = csv;
  summary.replace_filename(csv.stem().string() + "_summary.csv");
  {
    std::ostringstream rows;
    rows << "id,contrast,ssim,nmse,psnr,zf_ssim,zf_nmse,zf_psnr\n" << std::setprecision(17);
    for (std::size_t i = 0; i < model_rows.size(); ++i) {
      const auto& m = model_rows[i];
      const auto& z = zf_rows[i];
      rows << m.id << ',' << m.contrast << ',' << m.ssim << ',' << m.nmse << ',' << m.psnr << ',' << z.ssim << ','
           << z.nmse << ',' << z.psnr << '\n';
    }
    write_text(csv, rows.str());
  }
  const auto model_report = metrics::aggregate(model_rows);
  const auto zf_report = metrics::aggregate(zf_rows);
  std::ostringstream table;
  metrics::write_summary_csv(table, "model", model_report);
  metrics::write_summary_csv(table, "zero_filled", zf_report, false);
  write_text(summary, table.str());

  ctx.out << "config digest " << hex64(loaded.checkpoint.config_digest()) << "\n"
          << "split " << a.split << ", acceleration " << a.accel << "x, " << slices.size() << " slices\n";
  print_summary(ctx.out, "model", model_report);
  print_summary(ctx.out, "zero_filled", zf_report);
  ctx.out << "wrote " << csv.string() << " and " << summary.string() << "\n";
  return 0;
}

// reconstruct -------------------------------------------------------------

struct ReconstructArgs {
  std::string checkpoint, data, slice_id, out_dir, config;
  std::vector<int> accels{4};
};

int reconstruct(Context& ctx, const ReconstructArgs& a) {
  for (int r : a.accels) {
    if (r != 4 && r != 8) throw std::invalid_argument("--accel must be 4 or 8");
  }
  const auto loaded = load_model(a.checkpoint, a.config);
  const auto manifest = data::read_manifest(a.data);
  const auto slice = data::load_slice(manifest, a.slice_id);
  const fs::path dir = a.out_dir;
  fs::create_directories(dir);

  struct Result {
    int accel;
    Tensor recon, error;
    double ssim;
  };
  std::vector<Result> results;
  Tensor truth;
  double range = 1.0;
  for (int r : a.accels) {
    const auto p = train::prepare(slice.k_full, r);
    truth = p.target;
    range = p.data_range;
    Tensor recon = loaded.model->reconstruct(p.k_u, p.mask);
    Tensor err = error_map(recon, p.target);
    results.push_back({r, std::move(recon), std::move(err), 0.0});
    results.back().ssim = metrics::ssim(results.back().recon, truth, range);
  }
  // Side-by-side accelerations share one error scale: half the largest
  // error at the highest acceleration. A single export uses its own max.
  double shared_scale = 0.0;
  if (results.size() > 1) {
    const auto worst = std::max_element(results.begin(), results.end(),
                                        [](const Result& x, const Result& y) { return x.accel < y.accel; });
    shared_scale = 0.5 * max_value(worst->error);
  }

  ctx.out << "config digest " << hex64(loaded.checkpoint.config_digest()) << "\n";
  write_pgm16(dir / "truth.pgm", truth, range);
  ctx.out << "slice " << a.slice_id << " (" << truth.dim(0) << "x" << truth.dim(1) << "), wrote truth.pgm\n";
  for (const auto& r : results) {
    const std::string tag = "R" + std::to_string(r.accel);
    write_pgm16(dir / ("recon_" + tag + ".pgm"), r.recon, range);
    write_pgm16(dir / ("error_" + tag + ".pgm"), r.error, results.size() > 1 ? shared_scale : max_value(r.error));
    ctx.out << tag << ": ssim " << std::setprecision(6) << r.ssim << ", max error " << max_value(r.error)
            << ", wrote recon_" << tag << ".pgm error_" << tag << ".pgm\n";
  }
  return 0;
}

// mask-inspect ------------------------------------------------------------

struct MaskArgs {
  std::size_t n = 0;
  int accel = 4;
  std::optional<double> center;
  std::size_t offset = 0;
};

int mask_inspect(Context& ctx, const MaskArgs& a) {
  const double cf = a.center.value_or(train::center_fraction_for(a.accel));
  const auto mask = mri::make_equispaced_mask(a.n, a.accel, cf, a.offset);
  std::ostringstream options;
  options << "n = " << a.n << "\nacceleration = " << a.accel << "\ncenter_fraction = " << util::format_double(cf)
          << "\noffset = " << a.offset << "\n";
  ctx.out << "config digest " << hex64(util::fnv1a(options.str())) << "\n"
          << "n_ky " << a.n << ", acceleration " << a.accel << ", center fraction " << cf << ", offset " << a.offset
          << "\n"
          << "center block [" << mask.center_begin << ", " << mask.center_end << ")\n"
          << "kept lines (" << mask.count() << "):";
  for (auto i : mask.kept_indices()) ctx.out << ' ' << i;
  ctx.out << "\nrealized acceleration " << mask.realized_acceleration() << "\n";
  return 0;
}

// gradcheck ---------------------------------------------------------------

struct GradcheckArgs {
  std::string module = "all";
  std::string fault;
};

int gradcheck_cmd(Context& ctx, const GradcheckArgs& a) {
  if (!a.fault.empty() && a.fault != "silu") throw std::invalid_argument("unknown fault '" + a.fault + "'");
  gradcheck::registered(a.module);  // validates the module name
  ctx.out << "config digest " << hex64(util::fnv1a("module = " + a.module + "\nfault = " + a.fault + "\n")) << "\n";
  ad::fault::corrupt_silu_derivative(a.fault == "silu");
  std::size_t failed = 0, total = 0;
  auto report = [&](const gradcheck::CheckResult& r) {
    ++total;
    failed += !r.passed();
    ctx.out << std::left << std::setw(20) << r.name << std::setw(10) << r.module << std::right << std::scientific
            << std::setprecision(3) << r.max_relative_error << "  (tol " << std::setprecision(0) << r.tolerance << ")  "
            << (r.passed() ? "ok" : "FAILED") << std::defaultfloat << std::endl;
  };
  try {
    gradcheck::run(a.module, report);
  } catch (...) {
    ad::fault::corrupt_silu_derivative(false);
    throw;
  }
  ad::fault::corrupt_silu_derivative(false);
  ctx.out << total << " ops checked, " << failed << " failed\n";
  return failed == 0 ? 0 : 2;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Cascaded multi-coil MRI reconstruction toolkit", "dircn"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate-data", "Synthesize a multi-coil phantom dataset");
  g->add_option("--config", gen.config, "Experiment config file");
  g->add_option("--out", gen.out, "Output directory")->required();
  config_flag(g, "--slices", "data_slices", gen.overrides, "Number of slices");
  config_flag(g, "--grid", "grid", gen.overrides, "Image side length");
  config_flag(g, "--coils", "coils", gen.overrides, "Receiver coils");
  config_flag(g, "--noise", "noise", gen.overrides, "k-space noise sigma");
  config_flag(g, "--seed", "data_seed", gen.overrides, "Master seed");
  g->add_flag("--force", gen.force, "Overwrite an existing dataset");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write a run directory");
  t->add_option("--config", tr.config, "Experiment config file");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Run directory")->required();
  config_flag(t, "--preset", "preset", tr.overrides, "baseline|dense|resxunet|interconn|dircn");
  config_flag(t, "--epochs", "epochs", tr.overrides, "Epochs");
  config_flag(t, "--slices-per-epoch", "slices_per_epoch", tr.overrides, "Slices drawn per epoch (0: all)");
  config_flag(t, "--accel", "acceleration", tr.overrides, "Fixed acceleration (0: uniform over 4 and 8)");
  config_flag(t, "--seed", "seed", tr.overrides, "Training seed");
  config_flag(t, "--lr", "base_lr", tr.overrides, "Initial learning rate");
  config_flag(t, "--cascades", "cascades", tr.overrides, "Cascades");
  config_flag(t, "--levels", "levels", tr.overrides, "U-Net levels");
  config_flag(t, "--base-channels", "base_channels", tr.overrides, "Channels at the first level");
  config_flag(t, "--init-seed", "init_seed", tr.overrides, "Parameter initialization seed");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on a dataset split");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--split", ev.split, "train|val|test")->capture_default_str();
  e->add_option("--accel", ev.accel, "Acceleration, 4 or 8")->capture_default_str();
  e->add_option("--csv", ev.csv, "Per-slice CSV (default: metrics.csv next to the checkpoint)");
  e->add_option("--config", ev.config, "Reject the checkpoint unless its model matches this config");

  ReconstructArgs rc;
  auto* r = app.add_subcommand("reconstruct", "Export reconstruction, truth and error map images");
  r->add_option("--checkpoint", rc.checkpoint, "Checkpoint file")->required();
  r->add_option("--data", rc.data, "Dataset directory")->required();
  r->add_option("--slice-id", rc.slice_id, "Slice id from the manifest")->required();
  r->add_option("--accel", rc.accels, "One or more accelerations (4, 8)")->capture_default_str();
  r->add_option("--out-dir", rc.out_dir, "Output directory")->required();
  r->add_option("--config", rc.config, "Reject the checkpoint unless its model matches this config");

  MaskArgs mk;
  double center = 0.0;
  auto* m = app.add_subcommand("mask-inspect", "Print the lines kept by an equispaced mask");
  m->add_option("--n", mk.n, "Phase-encode lines")->required();
  m->add_option("--accel", mk.accel, "Acceleration")->required();
  auto* center_opt = m->add_option("--center", center, "Centre fraction (default 0.32/accel)");
  m->add_option("--offset", mk.offset, "Offset of the outer lines")->capture_default_str();

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  c->add_option("--module", gc.module, "all|autodiff|network")->capture_default_str();
  c->add_option("--inject-fault", gc.fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*g) return generate_data(ctx, gen);
    if (*t) return train_cmd(ctx, tr);
    if (*e) return evaluate(ctx, ev);
    if (*r) return reconstruct(ctx, rc);
    if (*m) {
      if (*center_opt) mk.center = center;
      return mask_inspect(ctx, mk);
    }
    if (*c) return gradcheck_cmd(ctx, gc);
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::out_of_range& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dircn::cli
