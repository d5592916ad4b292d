#include "dircn/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dircn/autodiff/ops.hpp"

namespace dircn::metrics {
namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

std::size_t window_for(std::size_t h, std::size_t w) {
  std::size_t n = std::min({kWindow, h, w});
  if (n % 2 == 0) --n;
  return n;
}

Tensor gaussian_taps(std::size_t n) {
  Tensor taps({n});
  const double c = static_cast<double>(n / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += taps[i];
  }
  for (auto& t : taps.values()) t /= total;
  return taps;
}

ad::DiffValue blur(const ad::DiffValue& x, const ad::DiffValue& rows, const ad::DiffValue& cols) {
  return ad::conv2d(ad::conv2d(x, rows, std::nullopt), cols, std::nullopt);
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
  }
}

ad::DiffValue as_image(const Tensor& t) {
  if (t.rank() < 2) throw std::invalid_argument("ssim: need at least 2 axes, got " + to_string(t.shape()));
  const std::size_t h = t.dim(t.rank() - 2), w = t.dim(t.rank() - 1);
  if (h * w != t.size()) throw std::invalid_argument("ssim: expected a single image, got " + to_string(t.shape()));
  return ad::constant(t.reshaped({1, 1, h, w}));
}

double mse(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

ad::DiffValue ssim(const ad::DiffValue& x, const ad::DiffValue& y, double data_range) {
  if (x.shape() != y.shape() || x.rank() != 4 || x.dim(0) != 1 || x.dim(1) != 1) {
    throw std::invalid_argument("ssim: expected two [1,1,H,W] images, got " + to_string(x.shape()) + " and " +
                                to_string(y.shape()));
  }
  if (!(data_range > 0.0)) throw std::invalid_argument("ssim: data_range must be positive");
  const std::size_t n = window_for(x.dim(2), x.dim(3));
  const Tensor taps = gaussian_taps(n);
  const auto rows = ad::constant(taps.reshaped({1, 1, n, 1}));
  const auto cols = ad::constant(taps.reshaped({1, 1, 1, n}));
  const double c1 = std::pow(0.01 * data_range, 2);
  const double c2 = std::pow(0.03 * data_range, 2);

  const auto mx = blur(x, rows, cols);
  const auto my = blur(y, rows, cols);
  const auto mxx = ad::mul(mx, mx), myy = ad::mul(my, my), mxy = ad::mul(mx, my);
  const auto vx = ad::sub(blur(ad::mul(x, x), rows, cols), mxx);
  const auto vy = ad::sub(blur(ad::mul(y, y), rows, cols), myy);
  const auto cxy = ad::sub(blur(ad::mul(x, y), rows, cols), mxy);

  const auto num = ad::mul(ad::add_scalar(ad::mul_scalar(mxy, 2.0), c1), ad::add_scalar(ad::mul_scalar(cxy, 2.0), c2));
  const auto den = ad::mul(ad::add_scalar(ad::add(mxx, myy), c1), ad::add_scalar(ad::add(vx, vy), c2));
  return ad::mean(ad::div(num, den));
}

double ssim(const Tensor& x, const Tensor& y, double data_range) {
  require_same("ssim", x, y);
  ad::NoGradGuard no_grad;
  return ssim(as_image(x), as_image(y), data_range).item();
}

double nmse(const Tensor& x_hat, const Tensor& x) {
  require_same("nmse", x_hat, x);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    err += (x_hat[i] - x[i]) * (x_hat[i] - x[i]);
    ref += x[i] * x[i];
  }
  if (ref == 0.0) throw std::invalid_argument("nmse: reference has zero norm");
  return err / ref;
}

double psnr(const Tensor& x_hat, const Tensor& x, double data_range) {
  require_same("psnr", x_hat, x);
  const double m = mse(x_hat, x);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / m);
}

const GroupSummary& MetricReport::group(const std::string& name) const {
  for (const auto& g : groups) {
    if (g.group == name) return g;
  }
  throw std::out_of_range("metric report has no group '" + name + "'");
}

MetricReport aggregate(std::vector<SliceMetrics> records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::vector<std::string> order = {"t1", "t2", "flair"};
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.contrast) == order.end()) order.push_back(r.contrast);
  }
  MetricReport report;
  auto summarize = [&](const std::string& name, bool all) {
    GroupSummary g{name};
    for (const auto& r : records) {
      if (!all && r.contrast != name) continue;
      ++g.count;
      g.ssim += r.ssim;
      g.nmse += r.nmse;
      g.psnr += r.psnr;
    }
    if (g.count == 0) return;
    const auto n = static_cast<double>(g.count);
    g.ssim /= n;
    g.nmse /= n;
    g.psnr /= n;
    report.groups.push_back(g);
  };
  for (const auto& tag : order) summarize(tag, false);
  summarize("ALL", true);
  report.records = std::move(records);
  return report;
}

Improvement consistency_check(const GroupSummary& baseline, const GroupSummary& candidate) {
  const double d0 = 1.0 - baseline.ssim, d1 = 1.0 - candidate.ssim;
  if (d0 <= 0.0 || baseline.nmse <= 0.0) throw std::invalid_argument("consistency_check: degenerate baseline");
  return {(d0 - d1) / d0, (baseline.nmse - candidate.nmse) / baseline.nmse};
}

void write_records_csv(std::ostream& out, const std::vector<SliceMetrics>& records) {
  out << "id,contrast,ssim,nmse,psnr\n" << std::setprecision(17);
  for (const auto& r : records) out << r.id << ',' << r.contrast << ',' << r.ssim << ',' << r.nmse << ',' << r.psnr << '\n';
}

void write_summary_csv(std::ostream& out, const std::string& method, const MetricReport& report, bool header) {
  if (header) out << "method,contrast,count,ssim,nmse,psnr\n";
  out << std::setprecision(17);
  for (const auto& g : report.groups) {
    out << method << ',' << g.group << ',' << g.count << ',' << g.ssim << ',' << g.nmse << ',' << g.psnr << '\n';
  }
}

}  // namespace dircn::metrics
