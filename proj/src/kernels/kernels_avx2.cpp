// Compiled with -mavx2 (no FMA) so that elementwise results match the scalar
// kernels bit for bit.
#include "spikematch/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace spikematch::simd {
namespace {

constexpr std::size_t kLane = 4;

void axpy(std::size_t n, double a, const double *x, double *y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d vy = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i)
    y[i] += a * x[i];
}

double dot(std::size_t n, const double *x, const double *y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLane <= n; i += 2 * kLane) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + kLane), _mm256_loadu_pd(y + i + kLane)));
  }
  for (; i + kLane <= n; i += kLane)
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  const __m256d acc = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double total = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i)
    total += x[i] * y[i];
  return total;
}

void lif_forward(std::size_t n, const LifParams &p, const double *in, double *u, double *u_pre,
                 double *s) {
  const __m256d tau = _mm256_set1_pd(p.tau);
  const __m256d vth = _mm256_set1_pd(p.v_th);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(tau, _mm256_loadu_pd(u + i)), _mm256_loadu_pd(in + i));
    const __m256d spike = _mm256_and_pd(_mm256_cmp_pd(v, vth, _CMP_GE_OQ), one);
    const __m256d post = p.reset == ResetKind::hard
                             ? _mm256_mul_pd(v, _mm256_sub_pd(one, spike))
                             : _mm256_sub_pd(v, _mm256_mul_pd(spike, vth));
    _mm256_storeu_pd(u_pre + i, v);
    _mm256_storeu_pd(s + i, spike);
    _mm256_storeu_pd(u + i, post);
  }
  for (; i < n; ++i) {
    const double v = p.tau * u[i] + in[i];
    const double spike = v >= p.v_th ? 1.0 : 0.0;
    u_pre[i] = v;
    s[i] = spike;
    u[i] = p.reset == ResetKind::hard ? v * (1.0 - spike) : v - spike * p.v_th;
  }
}

void surrogate(std::size_t n, const SurrogateParams &p, const double *u_pre, double *out) {
  const __m256d vth = _mm256_set1_pd(p.v_th);
  const __m256d width = _mm256_set1_pd(p.width);
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  if (p.kind == SurrogateParams::triangular) {
    const double inv = 1.0 / (p.width * p.width);
    const __m256d inv_g2 = _mm256_set1_pd(inv);
    for (; i + kLane <= n; i += kLane) {
      const __m256d dist = _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_loadu_pd(u_pre + i), vth));
      const __m256d r = _mm256_max_pd(_mm256_sub_pd(width, dist), zero);
      _mm256_storeu_pd(out + i, _mm256_mul_pd(inv_g2, r));
    }
    for (; i < n; ++i) {
      const double r = p.width - std::fabs(u_pre[i] - p.v_th);
      out[i] = inv * (r > 0.0 ? r : 0.0);
    }
  } else {
    const double h = 1.0 / (2.0 * p.width);
    const __m256d vh = _mm256_set1_pd(h);
    for (; i + kLane <= n; i += kLane) {
      const __m256d dist = _mm256_andnot_pd(sign, _mm256_sub_pd(_mm256_loadu_pd(u_pre + i), vth));
      _mm256_storeu_pd(out + i, _mm256_and_pd(_mm256_cmp_pd(dist, width, _CMP_LE_OQ), vh));
    }
    for (; i < n; ++i)
      out[i] = std::fabs(u_pre[i] - p.v_th) <= p.width ? h : 0.0;
  }
}

void lif_backward(std::size_t n, const LifBackwardParams &p, const double *ds, const double *du,
                  const double *sg, const double *s, const double *u_pre, double *d_upre) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d vth = _mm256_set1_pd(p.v_th);
  const bool hard = p.reset == ResetKind::hard;
  std::size_t i = 0;
  for (; i + kLane <= n; i += kLane) {
    const __m256d vds = _mm256_loadu_pd(ds + i);
    const __m256d vdu = _mm256_loadu_pd(du + i);
    __m256d g = vds;
    if (!p.detach_reset)
      g = _mm256_sub_pd(vds, _mm256_mul_pd(vdu, hard ? _mm256_loadu_pd(u_pre + i) : vth));
    const __m256d carry = hard ? _mm256_mul_pd(vdu, _mm256_sub_pd(one, _mm256_loadu_pd(s + i))) : vdu;
    _mm256_storeu_pd(d_upre + i, _mm256_add_pd(_mm256_mul_pd(g, _mm256_loadu_pd(sg + i)), carry));
  }
  for (; i < n; ++i) {
    const double g = p.detach_reset ? ds[i] : ds[i] - du[i] * (hard ? u_pre[i] : p.v_th);
    d_upre[i] = g * sg[i] + (hard ? du[i] * (1.0 - s[i]) : du[i]);
  }
}

} // namespace

const KernelSet &avx2_kernel_set() noexcept {
  static const KernelSet set{"avx2", axpy, dot, lif_forward, surrogate, lif_backward};
  return set;
}

} // namespace spikematch::simd
