#include <cmath>
#include <stdexcept>

#include "dircn/autodiff/ops.hpp"
#include "dircn/simd/kernels.hpp"

namespace dircn::ad {

DiffValue instance_norm(const DiffValue& x, double eps) {
  if (x.rank() != 4) throw std::invalid_argument("instance_norm: expected [N,C,H,W], got " + to_string(x.shape()));
  const std::size_t planes = x.dim(0) * x.dim(1);
  const std::size_t area = x.dim(2) * x.dim(3);
  if (area < 2) throw std::invalid_argument("instance_norm: H*W must be at least 2, got " + to_string(x.shape()));
  const auto& k = simd::active();
  const double inv_area = 1.0 / static_cast<double>(area);

  Tensor out(x.shape());
  std::vector<double> inv_std(planes);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = x.value().data() + p * area;
    double* dst = out.data() + p * area;
    const double mu = k.sum(area, src) * inv_area;
    for (std::size_t i = 0; i < area; ++i) dst[i] = src[i] - mu;
    const double var = k.dot(area, dst, dst) * inv_area;
    inv_std[p] = 1.0 / std::sqrt(var + eps);
    k.scale(area, inv_std[p], dst, dst);
  }

  return record(std::move(out), {x}, "instance_norm", [planes, area, inv_area, inv_std](Node& self) {
    const auto& k = simd::active();
    auto& gx = self.parents[0]->accum();
    for (std::size_t p = 0; p < planes; ++p) {
      const double* g = self.pass_grad.data() + p * area;
      const double* y = self.value.data() + p * area;
      double* dst = gx.data() + p * area;
      const double g_mean = k.sum(area, g) * inv_area;
      const double gy_mean = k.dot(area, g, y) * inv_area;
      const double s = inv_std[p];
      for (std::size_t i = 0; i < area; ++i) dst[i] += s * (g[i] - g_mean - y[i] * gy_mean);
    }
  });
}

}  // namespace dircn::ad
