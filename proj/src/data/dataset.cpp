#include "dircn/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dircn/util/binary_io.hpp"
#include "dircn/util/hash.hpp"

namespace dircn::data {
namespace {

constexpr const char* kFormat = "dircn-dataset-1";
constexpr const char* kContrasts[3] = {"t1", "t2", "flair"};

std::map<std::string, std::string> parse_fields(const std::string& line, std::size_t line_no) {
  std::map<std::string, std::string> out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": expected key=value, got '" + token + "'");
    }
    out[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return out;
}

const std::string& field(const std::map<std::string, std::string>& f, const std::string& key, std::size_t line_no) {
  const auto it = f.find(key);
  if (it == f.end()) throw std::runtime_error("manifest line " + std::to_string(line_no) + ": missing '" + key + "'");
  return it->second;
}

std::uint64_t to_u64(const std::string& text, std::size_t line_no) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text[0] == '-') {
    throw std::runtime_error("manifest line " + std::to_string(line_no) + ": bad integer '" + text + "'");
  }
  return v;
}

// Largest-remainder apportionment of n items over weights.
std::vector<std::size_t> apportion(std::size_t n, const std::array<double, 3>& weights) {
  const double total = weights[0] + weights[1] + weights[2];
  std::vector<std::size_t> counts(3);
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * weights[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[rem[k % 3].second];
  return counts;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + text + "' (expected train, val or test)");
}

const SliceRecord& DatasetManifest::find(const std::string& id) const {
  for (const auto& s : slices) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("slice '" + id + "' not found in dataset " + root.string());
}

std::vector<std::string> DatasetManifest::ids(Split split) const {
  std::vector<std::string> out;
  for (const auto& s : slices) {
    if (s.split == split) out.push_back(s.id);
  }
  return out;
}

std::string DatasetManifest::text() const {
  std::ostringstream out;
  out << "format=" << kFormat << "\n";
  out << "blob=" << blob << "\n";
  for (const auto& s : slices) {
    out << "id=" << s.id << " split=" << to_string(s.split) << " contrast=" << s.contrast << " grid=" << s.grid
        << " coils=" << s.coils << " seed=" << s.seed << " offset=" << s.offset << " length=" << s.length << "\n";
  }
  return out.str();
}

std::uint64_t DatasetManifest::digest() const { return util::fnv1a(text()); }

void validate(const DatasetSpec& spec) {
  if (spec.slices < 1) throw std::invalid_argument("dataset: slices must be >= 1");
  if (spec.coils < 1) throw std::invalid_argument("dataset: coils must be >= 1, got " + std::to_string(spec.coils));
  if (spec.grid < 16) throw std::invalid_argument("dataset: grid must be >= 16, got " + std::to_string(spec.grid));
  if (!(spec.noise_sigma >= 0.0)) throw std::invalid_argument("dataset: noise must be >= 0");
  if (!(spec.train_fraction >= 0.0 && spec.val_fraction >= 0.0 && spec.train_fraction + spec.val_fraction <= 1.0)) {
    throw std::invalid_argument("dataset: split fractions must be non-negative and sum to at most 1");
  }
  for (double w : spec.contrast_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("dataset: contrast weights must be >= 0");
  }
  if (spec.contrast_weights[0] + spec.contrast_weights[1] + spec.contrast_weights[2] <= 0.0) {
    throw std::invalid_argument("dataset: contrast weights must not all be zero");
  }
}

std::vector<PhantomSpec> make_specs(const DatasetSpec& spec) {
  validate(spec);
  const auto counts = apportion(spec.slices, spec.contrast_weights);
  std::vector<std::string> tags;
  for (std::size_t c = 0; c < 3; ++c) tags.insert(tags.end(), counts[c], kContrasts[c]);
  std::mt19937_64 rng(util::mix_seed(spec.seed, 0x7461));
  std::shuffle(tags.begin(), tags.end(), rng);

  std::vector<PhantomSpec> out;
  for (std::size_t i = 0; i < spec.slices; ++i) {
    PhantomSpec p;
    p.grid = spec.grid;
    p.coils = spec.coils;
    p.ellipses = spec.ellipses;
    p.noise_sigma = spec.noise_sigma;
    p.contrast = tags[i];
    p.seed = util::mix_seed(spec.seed, i);
    out.push_back(p);
  }
  return out;
}

std::vector<Split> assign_splits(std::size_t n, double train_fraction, double val_fraction, std::uint64_t seed) {
  const auto n_train = static_cast<std::size_t>(std::lround(static_cast<double>(n) * train_fraction));
  const auto n_val = std::min(n - std::min(n, n_train),
                              static_cast<std::size_t>(std::lround(static_cast<double>(n) * val_fraction)));
  std::vector<Split> splits(n, Split::Test);
  std::fill_n(splits.begin(), std::min(n, n_train), Split::Train);
  std::fill_n(splits.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)), n_val, Split::Val);
  std::mt19937_64 rng(util::mix_seed(seed, 0x5370));
  std::shuffle(splits.begin(), splits.end(), rng);
  return splits;
}

DatasetManifest build_dataset(const std::vector<PhantomSpec>& specs, const std::vector<Split>& splits,
                              const std::filesystem::path& dir) {
  if (specs.size() != splits.size()) throw std::invalid_argument("build_dataset: one split per spec required");
  for (const auto& s : specs) validate(s);
  std::filesystem::create_directories(dir);

  DatasetManifest manifest;
  manifest.root = dir;
  std::ofstream blob(dir / manifest.blob, std::ios::binary | std::ios::trunc);
  if (!blob) throw std::runtime_error("cannot write " + (dir / manifest.blob).string());
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto k = acquire(specs[i]);
    util::write_f64s(blob, k.data.values());
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", i);
    const std::uint64_t length = k.data.size() * 8;
    manifest.slices.push_back({id, splits[i], specs[i].contrast, specs[i].grid, specs[i].coils, specs[i].seed, offset, length});
    offset += length;
  }
  blob.close();
  if (!blob) throw std::runtime_error("write failed for " + (dir / manifest.blob).string());

  std::ofstream text(dir / "manifest.txt", std::ios::trunc);
  text << manifest.text();
  if (!text) throw std::runtime_error("write failed for " + (dir / "manifest.txt").string());
  return manifest;
}

DatasetManifest build_dataset(const DatasetSpec& spec, const std::filesystem::path& dir) {
  return build_dataset(make_specs(spec), assign_splits(spec.slices, spec.train_fraction, spec.val_fraction, spec.seed),
                       dir);
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw std::runtime_error("cannot open " + (dir / "manifest.txt").string());
  DatasetManifest m;
  m.root = dir;
  std::string line;
  std::size_t line_no = 0;
  bool have_format = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = parse_fields(line, line_no);
    if (f.count("format")) {
      if (f.at("format") != kFormat) {
        throw std::runtime_error("manifest: unsupported format '" + f.at("format") + "', expected " + kFormat);
      }
      have_format = true;
    } else if (f.count("blob")) {
      m.blob = f.at("blob");
    } else {
      SliceRecord r;
      r.id = field(f, "id", line_no);
      try {
        r.split = parse_split(field(f, "split", line_no));
      } catch (const std::invalid_argument& e) {
        throw std::runtime_error("manifest line " + std::to_string(line_no) + ": " + e.what());
      }
      r.contrast = field(f, "contrast", line_no);
      r.grid = to_u64(field(f, "grid", line_no), line_no);
      r.coils = to_u64(field(f, "coils", line_no), line_no);
      r.seed = to_u64(field(f, "seed", line_no), line_no);
      r.offset = to_u64(field(f, "offset", line_no), line_no);
      r.length = to_u64(field(f, "length", line_no), line_no);
      if (r.length != r.coils * 2 * r.grid * r.grid * 8) {
        throw std::runtime_error("manifest line " + std::to_string(line_no) + ": length does not match grid and coils");
      }
      for (const auto& s : m.slices) {
        if (s.id == r.id) throw std::runtime_error("manifest: duplicate id '" + r.id + "'");
      }
      m.slices.push_back(r);
    }
  }
  if (!have_format) throw std::runtime_error("manifest: missing format line in " + (dir / "manifest.txt").string());
  return m;
}

LoadedSlice load_slice(const DatasetManifest& manifest, const std::string& id) {
  const SliceRecord& r = manifest.find(id);
  const auto path = manifest.root / manifest.blob;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (r.offset + r.length > size) {
    throw std::runtime_error("slice '" + id + "' extends past the end of " + path.string() + " (corrupt or truncated)");
  }
  in.seekg(static_cast<std::streamoff>(r.offset));
  Tensor t({r.coils, 2, r.grid, r.grid});
  util::read_f64s(in, t.values(), "slice '" + id + "'");
  LoadedSlice out{mri::MultiCoilKSpace{std::move(t)}, r.contrast};
  mri::validate(out.k_full);
  return out;
}

}  // namespace dircn::data
