#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dircn/data/dataset.hpp"
#include "dircn/data/phantom.hpp"
#include "support.hpp"

using namespace dircn;
using namespace dircn::data;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

double max_rss_error(const mri::SensitivityMaps& s) {
  const std::size_t plane = s.nx() * s.ny();
  double worst = 0.0;
  for (std::size_t p = 0; p < plane; ++p) {
    double e = 0.0;
    for (std::size_t c = 0; c < s.coils(); ++c) {
      e += std::pow(s.data[c * 2 * plane + p], 2) + std::pow(s.data[(c * 2 + 1) * plane + p], 2);
    }
    worst = std::max(worst, std::abs(e - 1.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("phantom examples") {
  PhantomSpec spec;
  spec.grid = 32;
  spec.seed = 5;
  const auto a = generate_phantom(spec);
  CHECK(a.data.shape() == Shape{1, 2, 32, 32});
  CHECK(a.data == generate_phantom(spec).data);

  double peak = 0.0;
  for (std::size_t p = 0; p < 32 * 32; ++p) peak = std::max(peak, std::hypot(a.data[p], a.data[1024 + p]));
  CHECK(std::abs(peak - 1.0) < 1e-12);

  spec.seed = 6;
  CHECK_FALSE(a.data == generate_phantom(spec).data);

  spec.ellipses = 0;
  const auto empty = generate_phantom(spec);
  for (double v : empty.data.storage()) CHECK(v == 0.0);

  spec.grid = 8;
  CHECK_THROWS_AS(generate_phantom(spec), std::invalid_argument);
  spec.grid = 32;
  spec.coils = 0;
  CHECK_THROWS_AS(validate(spec), std::invalid_argument);
}

TEST_CASE("sensitivity maps are unit RSS and smooth") {
  for (std::size_t coils : {1, 2, 4, 8}) {
    CAPTURE(coils);
    const auto s = generate_sensitivities(coils, 64, 11);
    CHECK(max_rss_error(s) < 1e-10);
    double grad = 0.0;
    const std::size_t n = 64, plane = n * n;
    for (std::size_t c = 0; c < coils; ++c) {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j + 1 < n; ++j) {
          const std::size_t p = i * n + j;
          const double* re = s.data.data() + c * 2 * plane;
          const double* im = re + plane;
          grad = std::max(grad, std::hypot(re[p + n] - re[p], im[p + n] - im[p]));
          grad = std::max(grad, std::hypot(re[p + 1] - re[p], im[p + 1] - im[p]));
        }
      }
    }
    CHECK(grad < 0.2);
  }
  const auto one = generate_sensitivities(1, 20, 3);
  for (std::size_t p = 0; p < 400; ++p) CHECK(std::hypot(one.data[p], one.data[400 + p]) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("noiseless acquisition round-trips to the phantom magnitude") {
  PhantomSpec spec;
  spec.grid = 48;
  spec.noise_sigma = 0.0;
  spec.seed = 17;
  const auto k = acquire(spec);
  const auto x = generate_phantom(spec);
  const auto pre = mri::preprocess(k, mri::make_equispaced_mask(48, 1, 1.0));
  double worst = 0.0;
  for (std::size_t p = 0; p < 48 * 48; ++p) {
    worst = std::max(worst, std::abs(pre.target[p] - std::hypot(x.data[p], x.data[48 * 48 + p])));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("split and contrast arithmetic") {
  auto splits = assign_splits(20, 0.8, 0.1, 3);
  CHECK(std::count(splits.begin(), splits.end(), Split::Train) == 16);
  CHECK(std::count(splits.begin(), splits.end(), Split::Val) == 2);
  CHECK(std::count(splits.begin(), splits.end(), Split::Test) == 2);
  splits = assign_splits(160, 0.75, 0.125, 1);
  CHECK(std::count(splits.begin(), splits.end(), Split::Train) == 120);
  CHECK(std::count(splits.begin(), splits.end(), Split::Val) == 20);

  DatasetSpec spec;
  spec.slices = 10;
  spec.contrast_weights = {0.5, 0.3, 0.2};
  const auto specs = make_specs(spec);
  const auto count = [&](const char* tag) {
    return std::count_if(specs.begin(), specs.end(), [&](const PhantomSpec& p) { return p.contrast == tag; });
  };
  CHECK(count("t1") == 5);
  CHECK(count("t2") == 3);
  CHECK(count("flair") == 2);

  spec.slices = 7;
  spec.contrast_weights = {1, 1, 1};
  const auto specs7 = make_specs(spec);
  for (const char* tag : {"t1", "t2", "flair"}) {
    const auto n = std::count_if(specs7.begin(), specs7.end(), [&](const PhantomSpec& p) { return p.contrast == tag; });
    CHECK(std::abs(static_cast<double>(n) - 7.0 / 3.0) < 1.0);
  }
  spec.coils = 0;
  CHECK_THROWS_AS(make_specs(spec), std::invalid_argument);
}

TEST_CASE("dataset round trip") {
  TempDir dir("dircn_test_dataset");
  DatasetSpec spec;
  spec.slices = 6;
  spec.grid = 16;
  spec.coils = 2;
  spec.seed = 9;
  const auto m = build_dataset(spec, dir.path);
  REQUIRE(m.slices.size() == 6);

  const auto loaded = read_manifest(dir.path);
  CHECK(loaded.text() == m.text());
  CHECK(loaded.digest() == m.digest());

  const auto specs = make_specs(spec);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto s = load_slice(loaded, m.slices[i].id);
    CHECK(s.contrast == specs[i].contrast);
    CHECK(s.k_full.data == acquire(specs[i]).data);
  }
  CHECK_THROWS_AS(load_slice(loaded, "nope"), std::out_of_range);

  TempDir again("dircn_test_dataset_again");
  CHECK(build_dataset(spec, again.path).digest() == m.digest());

  std::filesystem::resize_file(dir.path / "data.bin", 100);
  CHECK_THROWS_AS(load_slice(loaded, m.slices[5].id), std::runtime_error);

  std::ofstream(dir.path / "manifest.txt") << "format=dircn-dataset-1\nid=a split=moon contrast=t1\n";
  CHECK_THROWS_AS(read_manifest(dir.path), std::runtime_error);
}
