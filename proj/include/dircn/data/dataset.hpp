#pragma once

// On-disk dataset: manifest.txt (one key=value record per line) next to a
// blob of little-endian float64 k-space, [coils, 2, grid, grid] per slice.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dircn/data/phantom.hpp"

namespace dircn::data {

enum class Split { Train, Val, Test };

std::string to_string(Split split);
Split parse_split(const std::string& text);

struct SliceRecord {
  std::string id;
  Split split = Split::Train;
  std::string contrast;
  std::size_t grid = 0;
  std::size_t coils = 0;
  std::uint64_t seed = 0;
  std::uint64_t offset = 0;  // bytes into the blob
  std::uint64_t length = 0;  // bytes
};

struct DatasetManifest {
  std::filesystem::path root;
  std::string blob = "data.bin";
  std::vector<SliceRecord> slices;

  const SliceRecord& find(const std::string& id) const;
  std::vector<std::string> ids(Split split) const;
  std::string text() const;
  std::uint64_t digest() const;
};

struct DatasetSpec {
  std::size_t slices = 160;
  std::size_t grid = 64;
  std::size_t coils = 4;
  std::size_t ellipses = 10;
  double noise_sigma = 0.002;
  std::uint64_t seed = 1;
  double train_fraction = 0.75;
  double val_fraction = 0.125;
  std::array<double, 3> contrast_weights{1.0, 1.0, 1.0};  // t1, t2, flair
};

void validate(const DatasetSpec& spec);

// Per-slice phantom specs with seeds derived from the master seed and
// contrast tags split by weight (largest remainder).
std::vector<PhantomSpec> make_specs(const DatasetSpec& spec);

// Split sizes round(n*train), round(n*val), remainder; assignment is a
// seeded permutation.
std::vector<Split> assign_splits(std::size_t n, double train_fraction, double val_fraction, std::uint64_t seed);

DatasetManifest build_dataset(const std::vector<PhantomSpec>& specs, const std::vector<Split>& splits,
                              const std::filesystem::path& dir);
DatasetManifest build_dataset(const DatasetSpec& spec, const std::filesystem::path& dir);

DatasetManifest read_manifest(const std::filesystem::path& dir);

struct LoadedSlice {
  mri::MultiCoilKSpace k_full;
  std::string contrast;
};

// Throws std::out_of_range for an unknown id, std::runtime_error for a
// malformed blob.
LoadedSlice load_slice(const DatasetManifest& manifest, const std::string& id);

}  // namespace dircn::data
