#include "spikematch/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace spikematch::simd {

#if defined(SPIKEMATCH_HAVE_AVX2)
const KernelSet &avx2_kernel_set() noexcept;
#endif

const KernelSet *avx2_kernels() noexcept {
#if defined(SPIKEMATCH_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernel_set() : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet &active_kernels() noexcept {
  static const KernelSet &chosen = []() -> const KernelSet & {
    const char *force = std::getenv("SPIKEMATCH_KERNELS");
    if (force != nullptr && std::strcmp(force, "scalar") == 0)
      return scalar_kernels();
    if (const KernelSet *avx = avx2_kernels())
      return *avx;
    return scalar_kernels();
  }();
  return chosen;
}

} // namespace spikematch::simd
