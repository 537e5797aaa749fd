#pragma once

#include "spikematch/neuronal.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace spikematch {

enum class Ablation : std::uint8_t { spikematch, averaged, intra, no_da, threshold };

std::string_view ablation_name(Ablation a);

/// Every training hyperparameter. Defaults follow the reference settings:
/// T=4, M=3, lambda=1, mu=7, B=32, lr=0.03, momentum 0.9, wd 5e-4, EMA 0.999,
/// tau=0.5, v_th=1, gamma=1, 2^18 iterations.
struct RunConfig {
  std::size_t T = 4;
  std::size_t M = 3;
  double lambda = 1.0;
  std::size_t mu = 7;
  std::size_t batch = 32;
  double lr = 0.03;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double ema_decay = 0.999;
  std::uint64_t iterations = 1u << 18;
  NeuronConfig neuron{};
  Ablation ablation = Ablation::spikematch;
  double conf_threshold = 0.8;
  std::size_t randaug_n = 3;
  double randaug_magnitude = 1.0;
  std::uint64_t seed = 0;

  double da_decay = 0.999;
  bool da_per_collection = false;
  bool readout_accumulate = false;

  std::string arch = "conv(8,5,2,pool)";
  std::string data;
  std::string test_data;
  std::size_t labels_per_class = 4;
  bool unlabeled_includes_labeled = false;
  std::uint64_t eval_every = 100;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// Number of collections actually used (1 in the averaged ablation).
  std::size_t collections() const noexcept { return ablation == Ablation::averaged ? 1 : M; }
};

/// Sets one key from its textual value; unknown keys throw ConfigError.
void set_config_value(RunConfig &cfg, const std::string &key, const std::string &value);

/// "key = value" lines; '#' starts a comment; values may be double-quoted.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string &path, RunConfig base = {});

/// Applies "key=value" overrides in order.
void apply_overrides(RunConfig &cfg, const std::vector<std::string> &overrides);

/// Canonical text form; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig &cfg);

std::vector<std::string> config_keys();

} // namespace spikematch
