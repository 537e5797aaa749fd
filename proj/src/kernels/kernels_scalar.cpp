#include "spikematch/kernels.hpp"

#include <cmath>

namespace spikematch::simd {
namespace {

void axpy(std::size_t n, double a, const double *x, double *y) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += a * x[i];
}

double dot(std::size_t n, const double *x, const double *y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += x[i] * y[i];
  return acc;
}

void lif_forward(std::size_t n, const LifParams &p, const double *in, double *u, double *u_pre,
                 double *s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double v = p.tau * u[i] + in[i];
    const double spike = v >= p.v_th ? 1.0 : 0.0;
    u_pre[i] = v;
    s[i] = spike;
    u[i] = p.reset == ResetKind::hard ? v * (1.0 - spike) : v - spike * p.v_th;
  }
}

void surrogate(std::size_t n, const SurrogateParams &p, const double *u_pre, double *out) {
  if (p.kind == SurrogateParams::triangular) {
    const double inv_g2 = 1.0 / (p.width * p.width);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = p.width - std::fabs(u_pre[i] - p.v_th);
      out[i] = inv_g2 * (r > 0.0 ? r : 0.0);
    }
  } else {
    const double h = 1.0 / (2.0 * p.width);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = std::fabs(u_pre[i] - p.v_th) <= p.width ? h : 0.0;
  }
}

void lif_backward(std::size_t n, const LifBackwardParams &p, const double *ds, const double *du,
                  const double *sg, const double *s, const double *u_pre, double *d_upre) {
  if (p.reset == ResetKind::hard) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = p.detach_reset ? ds[i] : ds[i] - du[i] * u_pre[i];
      d_upre[i] = g * sg[i] + du[i] * (1.0 - s[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = p.detach_reset ? ds[i] : ds[i] - du[i] * p.v_th;
      d_upre[i] = g * sg[i] + du[i];
    }
  }
}

} // namespace

const KernelSet &scalar_kernels() noexcept {
  static const KernelSet set{"scalar", axpy, dot, lif_forward, surrogate, lif_backward};
  return set;
}

} // namespace spikematch::simd
