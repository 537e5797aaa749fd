#pragma once

#include "spikematch/network.hpp"
#include "spikematch/neuronal.hpp"

#include <cstdint>
#include <string>

namespace spikematch {

/// Model checkpoint: "SPKM" magic, format version, input shape, neuron
/// config, layer specs, float32 weights and the run configuration as text.
struct Checkpoint {
  Network net;
  NeuronConfig neuron;
  std::string run_config;  // key = value lines
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

std::vector<unsigned char> encode_checkpoint(const Checkpoint &ckpt);
Checkpoint decode_checkpoint(const std::vector<unsigned char> &bytes);

} // namespace spikematch
