#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dircn/training/training.hpp"
#include "dircn/util/binary_io.hpp"
#include "dircn/util/hash.hpp"

namespace dircn::train {
namespace {

constexpr char kMagic[6] = {'D', 'I', 'R', 'C', 'N', '1'};
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 40;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u64(std::uint64_t v) {
    v = util::to_le(v);
    bytes(&v, 8);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void f64s(const std::vector<double>& xs) {
    u64(xs.size());
    for (double x : xs) f64(x);
  }
  const std::string& data() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}
  void bytes(void* p, std::size_t n) {
    if (n > end_ - pos_) throw std::runtime_error("checkpoint: corrupt file (record runs past the end)");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return util::to_le(v);
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::uint64_t count() {
    const std::uint64_t n = u64();
    if (n > kMaxCount || n > end_ - pos_) throw std::runtime_error("checkpoint: corrupt file (implausible length)");
    return n;
  }
  std::string str() {
    std::string s(count(), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  std::vector<double> f64s() {
    std::vector<double> xs(count());
    if (xs.size() * 8 > end_ - pos_) throw std::runtime_error("checkpoint: corrupt file (blob runs past the end)");
    for (double& x : xs) x = f64();
    return xs;
  }
  bool done() const { return pos_ == end_; }

 private:
  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_blob(Writer& w, const std::string& name, const Shape& shape, const std::vector<double>& values) {
  w.str(name);
  w.u64(shape.size());
  for (auto d : shape) w.u64(d);
  w.f64s(values);
}

NamedBlob read_blob(Reader& r) {
  NamedBlob b;
  b.name = r.str();
  const auto rank = r.count();
  for (std::uint64_t i = 0; i < rank; ++i) b.shape.push_back(r.u64());
  b.values = r.f64s();
  if (numel(b.shape) != b.values.size()) throw std::runtime_error("checkpoint: blob '" + b.name + "' size mismatch");
  return b;
}

}  // namespace

std::uint64_t Checkpoint::config_digest() const { return util::fnv1a(model_config); }

Checkpoint capture(const net::Dircn& model, const Adam& optimizer, const std::mt19937_64& rng, std::uint64_t epoch) {
  Checkpoint c;
  c.model_config = net::to_text(model.config());
  c.epoch = epoch;
  std::ostringstream rs;
  rs << rng;
  c.rng_state = rs.str();
  c.optimizer = optimizer.state();
  for (const auto& p : model.parameters().items()) {
    c.parameters.push_back({p.name, p.value.shape(), {p.value.data().begin(), p.value.data().end()}});
  }
  return c;
}

void load_parameters(const Checkpoint& ckpt, net::Dircn& model) {
  if (ckpt.model_config != net::to_text(model.config())) {
    throw std::invalid_argument("checkpoint was written for a different model configuration:\n" + ckpt.model_config);
  }
  auto& items = model.parameters().items();
  if (ckpt.parameters.size() != items.size()) throw std::invalid_argument("checkpoint: parameter count mismatch");
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& blob = ckpt.parameters[k];
    if (blob.name != items[k].name || blob.shape != items[k].value.shape()) {
      throw std::invalid_argument("checkpoint: parameter '" + blob.name + "' does not match '" + items[k].name + "'");
    }
    std::copy(blob.values.begin(), blob.values.end(), items[k].value.mutable_data().begin());
  }
}

void restore(const Checkpoint& ckpt, net::Dircn& model, Adam& optimizer, std::mt19937_64& rng) {
  load_parameters(ckpt, model);
  const auto& items = model.parameters().items();
  const auto& o = ckpt.optimizer;
  if (o.m.size() != items.size() || o.v.size() != items.size() || o.v_max.size() != items.size()) {
    throw std::invalid_argument("checkpoint: optimizer state does not match the model");
  }
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (o.m[k].size() != items[k].value.size() || o.v[k].size() != items[k].value.size() ||
        o.v_max[k].size() != (o.amsgrad ? items[k].value.size() : 0)) {
      throw std::invalid_argument("checkpoint: optimizer state for '" + items[k].name + "' has the wrong size");
    }
  }
  optimizer.state() = o;
  std::istringstream rs(ckpt.rng_state);
  rs >> rng;
  if (!rs) throw std::invalid_argument("checkpoint: unreadable RNG state");
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(Checkpoint::kVersion);
  w.u64(c.config_digest());
  w.str(c.model_config);
  w.u64(c.epoch);
  w.str(c.rng_state);
  const auto& o = c.optimizer;
  w.u64(o.step);
  w.f64(o.beta1);
  w.f64(o.beta2);
  w.f64(o.eps);
  w.u64(o.amsgrad ? 1 : 0);
  w.u64(c.parameters.size());
  for (std::size_t k = 0; k < c.parameters.size(); ++k) {
    const auto& p = c.parameters[k];
    write_blob(w, "param:" + p.name, p.shape, p.values);
    write_blob(w, "adam.m:" + p.name, {o.m.at(k).size()}, o.m[k]);
    write_blob(w, "adam.v:" + p.name, {o.v.at(k).size()}, o.v[k]);
    write_blob(w, "adam.vmax:" + p.name, {o.v_max.at(k).size()}, o.v_max[k]);
  }
  const std::uint64_t checksum = util::fnv1a(w.data());
  w.u64(checksum);

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";
  if (buf.size() < sizeof kMagic + 4 + 8 + 8) throw std::runtime_error(where + "truncated (" + std::to_string(buf.size()) + " bytes)");
  if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) throw std::runtime_error(where + "not a checkpoint (bad magic)");

  std::uint64_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 8, 8);
  if (util::to_le(stored) != util::fnv1a({reinterpret_cast<const unsigned char*>(buf.data()), buf.size() - 8})) {
    throw std::runtime_error(where + "checksum mismatch (truncated or corrupt)");
  }

  Reader r(buf, buf.size() - 8);
  char magic[6];
  r.bytes(magic, 6);
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw std::runtime_error(where + "version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(Checkpoint::kVersion) + ")");
  }
  Checkpoint c;
  const std::uint64_t digest = r.u64();
  c.model_config = r.str();
  if (digest != c.config_digest()) throw std::runtime_error(where + "config digest mismatch");
  c.epoch = r.u64();
  c.rng_state = r.str();
  auto& o = c.optimizer;
  o.step = r.u64();
  o.beta1 = r.f64();
  o.beta2 = r.f64();
  o.eps = r.f64();
  o.amsgrad = r.u64() != 0;
  const auto n = r.count();
  auto expect = [&](NamedBlob b, const std::string& prefix, const std::string& name) {
    if (b.name != prefix + name) throw std::runtime_error(where + "expected blob '" + prefix + name + "', found '" + b.name + "'");
    return b;
  };
  for (std::uint64_t k = 0; k < n; ++k) {
    auto p = read_blob(r);
    if (p.name.rfind("param:", 0) != 0) throw std::runtime_error(where + "unexpected blob '" + p.name + "'");
    p.name = p.name.substr(6);
    o.m.push_back(expect(read_blob(r), "adam.m:", p.name).values);
    o.v.push_back(expect(read_blob(r), "adam.v:", p.name).values);
    o.v_max.push_back(expect(read_blob(r), "adam.vmax:", p.name).values);
    c.parameters.push_back(std::move(p));
  }
  if (!r.done()) throw std::runtime_error(where + "trailing data");
  return c;
}

}  // namespace dircn::train
