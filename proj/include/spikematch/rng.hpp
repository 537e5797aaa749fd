#pragma once

#include <cstdint>
#include <limits>

namespace spikematch {

/// Counter-based generator: the output sequence is a pure function of
/// (seed, stream key, counter). Independent purposes (init, augmentation,
/// batching) derive their own stream keys, so the order in which substreams
/// are consumed, or the thread that consumes them, never changes the values.
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Multiply-shift; bias is below 2^-64 * n.
  std::uint64_t below(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Derive an independent child stream, e.g. one per (iteration, sample).
  CounterRng substream(std::uint64_t a, std::uint64_t b = 0) const noexcept {
    CounterRng child(0, 0);
    child.key_ = mix(key_ ^ mix(a * 0xd1b54a32d192ed03ULL + mix(b + 1)));
    return child;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Purpose tags for top-level substreams.
enum class RngPurpose : std::uint64_t { init = 1, augment = 2, batching = 3, split = 4, synth = 5, probe = 6 };

inline CounterRng purpose_stream(std::uint64_t seed, RngPurpose p) noexcept {
  return CounterRng(seed, static_cast<std::uint64_t>(p));
}

} // namespace spikematch
