#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dircn/autodiff/value.hpp"
#include "dircn/tensor.hpp"

namespace dircn::metrics {

// Gaussian-window SSIM over the last two axes of a [1, 1, H, W] value.
// Window is 11 taps with sigma 1.5, shrunk to the largest odd size that fits
// for images smaller than 11. Statistics use valid windows only.
ad::DiffValue ssim(const ad::DiffValue& x, const ad::DiffValue& y, double data_range);

// Same quantity on plain images (any rank >= 2, last two axes spatial).
double ssim(const Tensor& x, const Tensor& y, double data_range);

// ||x_hat - x||^2 / ||x||^2
double nmse(const Tensor& x_hat, const Tensor& x);

// 10 log10(range^2 / mse); +infinity when mse == 0.
double psnr(const Tensor& x_hat, const Tensor& x, double data_range);

struct SliceMetrics {
  std::string id;
  std::string contrast;
  double ssim = 0.0;
  double nmse = 0.0;
  double psnr = 0.0;
};

struct GroupSummary {
  std::string group;  // contrast tag or "ALL"
  std::size_t count = 0;
  double ssim = 0.0;
  double nmse = 0.0;
  double psnr = 0.0;
};

struct MetricReport {
  std::vector<SliceMetrics> records;
  std::vector<GroupSummary> groups;  // t1, t2, flair, other tags in order seen, then ALL

  const GroupSummary& group(const std::string& name) const;
};

// Per-group arithmetic means; empty groups are omitted.
MetricReport aggregate(std::vector<SliceMetrics> records);

// Relative reductions going from `baseline` to `candidate`.
struct Improvement {
  double dissimilarity_reduction = 0.0;  // on (1 - SSIM)
  double nmse_reduction = 0.0;
};
Improvement consistency_check(const GroupSummary& baseline, const GroupSummary& candidate);

void write_records_csv(std::ostream& out, const std::vector<SliceMetrics>& records);
// Pass header = false to append another method's rows to the same table.
void write_summary_csv(std::ostream& out, const std::string& method, const MetricReport& report, bool header = true);

}  // namespace dircn::metrics
