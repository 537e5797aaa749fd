#pragma once

// Data-parallel inner loops shared by the neuron, network and objective code.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active set is chosen once at runtime from CPUID and can be
// forced back to scalar with SPIKEMATCH_KERNELS=scalar. Elementwise kernels
// are bit-identical across variants; reductions (dot) differ only in
// summation order.

#include <cstddef>

namespace spikematch::simd {

enum class ResetKind : unsigned char { hard = 0, soft = 1 };

struct LifParams {
  double tau;
  double v_th;
  ResetKind reset;
};

struct SurrogateParams {
  enum Kind : unsigned char { triangular = 0, rectangular = 1 } kind;
  double v_th;
  double width;  // gamma for triangular, half-width for rectangular
};

struct LifBackwardParams {
  double v_th;
  ResetKind reset;
  bool detach_reset;  // treat s as a constant on the reset path
};

struct KernelSet {
  const char *name;

  // y[i] += a * x[i]
  void (*axpy)(std::size_t n, double a, const double *x, double *y);
  // sum_i x[i] * y[i]
  double (*dot)(std::size_t n, const double *x, const double *y);
  // Fused membrane update, firing and reset.
  //   u_pre = tau*u + in; s = (u_pre >= v_th); u = reset(u_pre, s)
  void (*lif_forward)(std::size_t n, const LifParams &p, const double *in, double *u,
                      double *u_pre, double *s);
  // Surrogate pseudo-derivative ds/du_pre.
  void (*surrogate)(std::size_t n, const SurrogateParams &p, const double *u_pre, double *out);
  // One backward step through the LIF nonlinearity:
  //   d_upre = (ds + reset-path term) * sg + du * (dU/dU_pre with s fixed)
  // where du is dL/du(t) carried back from t+1.
  void (*lif_backward)(std::size_t n, const LifBackwardParams &p, const double *ds,
                       const double *du, const double *sg, const double *s,
                       const double *u_pre, double *d_upre);
};

const KernelSet &scalar_kernels() noexcept;

/// nullptr when the CPU (or build) has no AVX2.
const KernelSet *avx2_kernels() noexcept;

/// Kernel set used by the library, selected once per process.
const KernelSet &active_kernels() noexcept;

} // namespace spikematch::simd
