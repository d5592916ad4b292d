#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "experiment.hpp"
#include "image.hpp"

using namespace dircn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run dircn_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dircn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / "dircn_cli_test";
  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

std::size_t parameter_count(const std::string& out) {
  std::smatch m;
  REQUIRE(std::regex_search(out, m, std::regex("parameters (\\d+)")));
  return std::stoul(m[1]);
}

const std::vector<std::string> kTiny = {"--cascades", "2", "--levels", "2", "--base-channels", "4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("mask-inspect reports the kept lines") {
  const auto r = dircn_cli({"mask-inspect", "--n", "100", "--accel", "4", "--center", "0.08"});
  CHECK(r.code == 0);
  CHECK(r.out.find("kept lines (25):") != std::string::npos);
  CHECK(r.out.find("realized acceleration 4") != std::string::npos);
  CHECK(r.out.find("config digest ") != std::string::npos);
  CHECK(dircn_cli({"mask-inspect", "--n", "8", "--accel", "4", "--center", "0.9"}).code == 1);
  CHECK(dircn_cli({"mask-inspect", "--n", "100"}).code == 1);
  CHECK(dircn_cli({}).code == 1);
  CHECK(dircn_cli({"frobnicate"}).code == 1);
}

TEST_CASE("experiment config") {
  Workspace ws;
  cli::ExperimentConfig c;
  c.set("preset", "baseline");
  c.set("levels", "2");
  CHECK(c.model().levels == 2);
  CHECK_FALSE(c.model().dense);
  CHECK_THROWS_AS(c.set("learning_rate", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("preset", "unet"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("epochs", "many"), std::invalid_argument);

  {
    std::ofstream(ws / "resolved") << c.resolved_text();
  }
  const auto back = cli::ExperimentConfig::from_file(ws / "resolved");
  CHECK(back.resolved_text() == c.resolved_text());
  CHECK(back.digest() == c.digest());

  {
    std::ofstream(ws / "bad.cfg") << "epochs = 3\nlearning_rate = 0.1\n";
  }
  const auto r = dircn_cli({"generate-data", "--config", ws / "bad.cfg", "--out", ws / "x"});
  CHECK(r.code == 1);
  CHECK(r.err.find("learning_rate") != std::string::npos);
}

TEST_CASE("generate-data") {
  Workspace ws;
  const auto r = dircn_cli({"generate-data", "--out", ws / "a", "--slices", "10", "--grid", "32", "--seed", "5"});
  REQUIRE(r.code == 0);
  const std::string manifest = slurp(fs::path(ws / "a") / "manifest.txt");
  std::size_t lines = 0, pos = 0;
  while ((pos = manifest.find("grid=32 ", pos)) != std::string::npos) ++lines, ++pos;
  CHECK(lines == 10);
  CHECK(fs::exists(fs::path(ws / "a") / "config.resolved"));

  REQUIRE(dircn_cli({"generate-data", "--out", ws / "b", "--slices", "10", "--grid", "32", "--seed", "5"}).code == 0);
  CHECK(slurp(fs::path(ws / "b") / "manifest.txt") == manifest);
  CHECK(slurp(fs::path(ws / "b") / "data.bin") == slurp(fs::path(ws / "a") / "data.bin"));

  CHECK(dircn_cli({"generate-data", "--out", ws / "a", "--slices", "10", "--grid", "32"}).code == 1);
  CHECK(dircn_cli({"generate-data", "--out", ws / "a", "--slices", "4", "--grid", "32", "--force"}).code == 0);
  CHECK(dircn_cli({"generate-data", "--out", ws / "c", "--coils", "0"}).code == 1);
  CHECK(dircn_cli({"generate-data", "--out", ws / "c", "--grid", "8"}).code == 1);
}

TEST_CASE("train, evaluate and reconstruct") {
  Workspace ws;
  REQUIRE(dircn_cli({"generate-data", "--out", ws / "data", "--slices", "16", "--grid", "24", "--coils", "3"}).code ==
          0);
  const auto base = with({"train", "--data", ws / "data", "--epochs", "1"}, kTiny);

  const auto b = dircn_cli(with(base, {"--out", ws / "baseline", "--preset", "baseline"}));
  const auto d = dircn_cli(with(base, {"--out", ws / "dense", "--preset", "dense"}));
  REQUIRE(b.code == 0);
  REQUIRE(d.code == 0);
  CHECK(parameter_count(d.out) - parameter_count(b.out) == 2 * 4 * 9);

  const auto run1 = dircn_cli(with(base, {"--out", ws / "r1", "--epochs", "2"}));
  const auto run2 = dircn_cli(with(base, {"--out", ws / "r2", "--epochs", "2"}));
  REQUIRE(run1.code == 0);
  for (const char* f : {"losses.csv", "checkpoint.bin", "config.resolved"}) {
    CAPTURE(f);
    CHECK(slurp(fs::path(ws / "r1") / f) == slurp(fs::path(ws / "r2") / f));
  }
  const auto resolved = cli::ExperimentConfig::from_file(fs::path(ws / "r1") / "config.resolved");
  CHECK(run1.out.find("config digest " + cli::hex64(resolved.digest())) != std::string::npos);
  CHECK(resolved.training().epochs == 2);

  // Config file values lose to flags.
  {
    std::ofstream(ws / "exp.cfg") << "epochs = 5\nlevels = 2\nbase_channels = 4\ncascades = 2\n";
  }
  const auto f = dircn_cli({"train", "--config", ws / "exp.cfg", "--data", ws / "data", "--out", ws / "r3",
                            "--epochs", "1"});
  REQUIRE(f.code == 0);
  CHECK(cli::ExperimentConfig::from_file(fs::path(ws / "r3") / "config.resolved").training().epochs == 1);

  const std::string ckpt = (fs::path(ws / "r1") / "checkpoint.bin").string();
  const auto e1 = dircn_cli({"evaluate", "--checkpoint", ckpt, "--data", ws / "data", "--csv", ws / "e1.csv"});
  const auto e2 = dircn_cli({"evaluate", "--checkpoint", ckpt, "--data", ws / "data", "--csv", ws / "e2.csv"});
  REQUIRE(e1.code == 0);
  const std::string csv = slurp(ws / "e1.csv");
  CHECK(csv == slurp(ws / "e2.csv"));
  CHECK(slurp(ws / "e1_summary.csv") == slurp(ws / "e2_summary.csv"));
  std::istringstream rows(csv);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "id,contrast,ssim,nmse,psnr,zf_ssim,zf_nmse,zf_psnr");
  std::size_t n = 0;
  while (std::getline(rows, line)) {
    ++n;
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
    CHECK(line.back() != ',');
  }
  CHECK(n == 2);
  CHECK(slurp(ws / "e1_summary.csv").find("zero_filled,ALL,2,") != std::string::npos);

  CHECK(dircn_cli({"evaluate", "--checkpoint", ckpt, "--data", ws / "data", "--accel", "6"}).code == 1);
  CHECK(dircn_cli({"evaluate", "--checkpoint", ckpt, "--data", ws / "data", "--config", ws / "exp.cfg"}).code == 0);
  {
    std::ofstream(ws / "other.cfg") << "levels = 3\n";
  }
  const auto mismatch = dircn_cli({"evaluate", "--checkpoint", ckpt, "--data", ws / "data", "--config", ws / "other.cfg"});
  CHECK(mismatch.code == 1);
  CHECK(dircn_cli({"evaluate", "--checkpoint", ws / "missing.bin", "--data", ws / "data"}).code == 2);

  const auto rec = dircn_cli({"reconstruct", "--checkpoint", ckpt, "--data", ws / "data", "--slice-id", "s00001",
                              "--accel", "4", "8", "--out-dir", ws / "img"});
  REQUIRE(rec.code == 0);
  for (const char* name : {"truth.pgm", "recon_R4.pgm", "recon_R8.pgm", "error_R4.pgm", "error_R8.pgm"}) {
    const auto img = cli::read_pgm16(fs::path(ws / "img") / name);
    CHECK(img.shape() == Shape{24, 24});
  }
  CHECK(dircn_cli({"reconstruct", "--checkpoint", ckpt, "--data", ws / "data", "--slice-id", "s99999", "--out-dir",
                   ws / "img"})
            .code == 1);
}

TEST_CASE("error map of an image with itself is blank") {
  Workspace ws;
  Tensor truth({5, 7});
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = 0.1 * static_cast<double>(i % 9);
  const auto err = cli::error_map(truth, truth);
  cli::write_pgm16(ws / "e.pgm", err, cli::max_value(err));
  const auto back = cli::read_pgm16(ws / "e.pgm");
  CHECK(back.shape() == Shape{5, 7});
  CHECK(cli::max_value(back) == 0.0);

  cli::write_pgm16(ws / "t.pgm", truth, cli::max_value(truth));
  const auto t = cli::read_pgm16(ws / "t.pgm");
  CHECK(cli::max_value(t) == 65535.0);
  CHECK(t[1] == std::round(65535.0 * 0.1 / 0.8));
}

TEST_CASE("gradcheck command") {
  const auto ok = dircn_cli({"gradcheck", "--module", "autodiff"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find(" 0 failed") != std::string::npos);
  const auto bad = dircn_cli({"gradcheck", "--module", "autodiff", "--inject-fault", "silu"});
  CHECK(bad.code == 2);
  CHECK(std::regex_search(bad.out, std::regex("silu +autodiff .*FAILED")));
  CHECK(bad.out.find(" 1 failed") != std::string::npos);
  CHECK(dircn_cli({"gradcheck", "--module", "tensor"}).code == 1);
  // The fault does not leak into later runs.
  CHECK(dircn_cli({"gradcheck", "--module", "autodiff"}).code == 0);
}
