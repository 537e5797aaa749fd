#pragma once

#include "spikematch/network.hpp"
#include "spikematch/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spikematch {

/// N images of shape (C_img, H, W) with pixel values in [0, 1] and labels in [0, classes).
struct Dataset {
  Shape3 shape{};
  std::uint32_t classes = 0;
  std::vector<float> pixels;  // N * shape.size()
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> image(std::size_t i) const { return {pixels.data() + i * shape.size(), shape.size()}; }
  std::vector<double> image_f64(std::size_t i) const;
  /// Throws ContractError unless the invariants hold.
  void validate() const;

  bool operator==(const Dataset &) const = default;
};

/// SDF layout (little-endian): "SDF1", u32 N, C_img, H, W, C, N*C_img*H*W
/// float32 pixels, N uint8 labels.
void save_sdf(const std::string &path, const Dataset &ds);
Dataset load_sdf(const std::string &path);
std::vector<unsigned char> encode_sdf(const Dataset &ds);
Dataset decode_sdf(const std::vector<unsigned char> &bytes);

/// Classic IDX (ubyte images + labels) to Dataset, pixels scaled by 1/255.
Dataset load_idx(const std::string &images_path, const std::string &labels_path);

struct SslSplit {
  std::vector<std::size_t> labeled;    // class-balanced
  std::vector<std::size_t> unlabeled;  // labels hidden from training
  std::uint64_t seed = 0;
};

/// Draws n_per_class labeled examples per class. The unlabeled pool is the
/// remainder, or the whole dataset when include_labeled is set.
SslSplit make_split(const Dataset &ds, std::size_t n_per_class, std::uint64_t seed, bool include_labeled = false);

/// Split manifest: {"seed": ..., "labeled": [...]} as JSON.
void save_split_manifest(const std::string &path, const SslSplit &split);

/// Endless stream over a pool; reshuffles after every pass.
class EpochSampler {
public:
  EpochSampler(std::vector<std::size_t> pool, CounterRng rng);
  std::size_t next();
  bool empty() const noexcept { return pool_.empty(); }

private:
  void reshuffle();

  std::vector<std::size_t> pool_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  CounterRng rng_;
};

struct BatchIndices {
  std::vector<std::size_t> labeled;
  std::vector<std::size_t> unlabeled;
};

/// Yields B labeled and mu*B unlabeled indices per call.
class BatchSampler {
public:
  BatchSampler(const SslSplit &split, std::size_t batch, std::size_t mu, std::uint64_t seed);
  BatchIndices next();

private:
  std::size_t batch_, mu_;
  EpochSampler labeled_, unlabeled_;
};

enum class SyntheticKind { gaussian_blobs, striped_patterns };

/// Class-separable single-channel rasters with additive Gaussian noise,
/// clamped to [0, 1]. Blob classes differ in the geometry of a bump pair
/// (orientation and spacing) placed at a jittered position; stripe classes
/// differ in orientation and frequency with a random phase.
Dataset make_synthetic(SyntheticKind kind, std::uint32_t classes, std::size_t per_class, std::uint32_t height,
                       std::uint32_t width, double noise, std::uint64_t seed);

} // namespace spikematch
