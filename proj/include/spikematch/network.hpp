#pragma once

#include "spikematch/matrix.hpp"
#include "spikematch/neuronal.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spikematch {

struct Shape3 {
  std::uint32_t c = 1, h = 1, w = 1;
  std::size_t size() const noexcept { return std::size_t{c} * h * w; }
  bool operator==(const Shape3 &) const = default;
};

enum class LayerKind : std::uint8_t { dense = 0, conv2d = 1, readout = 2 };

/// One synaptic layer. Dense and conv layers are followed by LIF neurons;
/// the readout layer is not.
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::uint32_t in_dim = 0;   // dense/readout
  std::uint32_t out_dim = 0;  // dense/readout (classes for readout)
  std::uint32_t c_in = 0, c_out = 0, kernel = 0, stride = 1, padding = 0;  // conv2d
  bool pool = false;  // 2x2 average pooling on the conv spike map

  // Filled by Network from the input shape.
  Shape3 in_shape{};
  Shape3 out_shape{};   // neuron grid (before pooling)
  Shape3 feed_shape{};  // what the next layer receives

  static LayerSpec dense(std::uint32_t in, std::uint32_t out);
  static LayerSpec conv2d(std::uint32_t c_in, std::uint32_t c_out, std::uint32_t kernel,
                          std::uint32_t padding, bool pool = false);
  static LayerSpec readout(std::uint32_t in, std::uint32_t classes);

  bool has_neuron() const noexcept { return kind != LayerKind::readout; }
  std::size_t fan_in() const noexcept;
  std::size_t weight_count() const noexcept;
  std::size_t neurons() const noexcept { return out_shape.size(); }
  std::string describe() const;
};

enum class ReadoutMode : std::uint8_t { instantaneous = 0, accumulate = 1 };

/// Layer stack plus weights. No biases.
class Network {
public:
  Network() = default;
  /// Validates the stack and infers per-layer shapes. The last layer must be
  /// the (only) readout.
  Network(Shape3 input, std::vector<LayerSpec> layers);

  const Shape3 &input_shape() const noexcept { return input_; }
  const std::vector<LayerSpec> &layers() const noexcept { return layers_; }
  std::size_t classes() const noexcept { return layers_.back().out_dim; }
  std::size_t parameter_count() const noexcept;
  /// Index of the last layer with LIF neurons, or npos when there is none.
  std::size_t last_spiking_layer() const noexcept;

  std::vector<std::vector<double>> weights;  // one flat tensor per layer
  ReadoutMode readout_mode = ReadoutMode::instantaneous;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  Shape3 input_{};
  std::vector<LayerSpec> layers_;
};

/// Parses "conv(c_out,k,pad[,pool]),dense(out),..." and appends the readout.
Network build_network(Shape3 input, std::size_t classes, const std::string &arch);

/// Readout values O^t, one row per time step.
struct OutputTrace {
  Matrix O;
  std::size_t steps() const noexcept { return O.rows; }
};

struct LayerTape {
  Matrix u_pre;   // T x neurons
  Matrix spikes;  // T x neurons
  Matrix feed;    // T x feed size, only when pooling changes the spike map
};

/// Everything the backward pass needs from a forward pass.
struct TemporalTape {
  std::size_t steps = 0;
  std::vector<double> input;
  std::vector<LayerTape> layers;  // one per layer; the readout entry is empty

  /// Input seen by layer l at step t.
  std::span<const double> layer_input(std::size_t l, std::size_t t) const;
};

struct ForwardResult {
  OutputTrace trace;
  TemporalTape tape;
};

/// Runs T steps with the same static input at each step; membranes start at 0.
ForwardResult forward_sequence(std::span<const double> x, const Network &net, std::size_t T,
                               const NeuronConfig &cfg);

/// Same computation without recording the tape.
OutputTrace infer(std::span<const double> x, const Network &net, std::size_t T,
                  const NeuronConfig &cfg);

/// Per-step spike vectors of one layer plus the readout (for diagnostics).
struct ProbeResult {
  OutputTrace trace;
  Matrix spikes;  // T x neurons of the probed layer
};
ProbeResult probe(std::span<const double> x, const Network &net, std::size_t T,
                  const NeuronConfig &cfg, std::size_t layer);

using Gradients = std::vector<std::vector<double>>;

Gradients zero_gradients(const Network &net);

/// Spatio-temporal backpropagation. Adds dL/dW for every layer into `grads`.
void backward_stbp(const TemporalTape &tape, const Matrix &dL_dO, const Network &net,
                   const NeuronConfig &cfg, Gradients &grads);

Gradients backward_stbp(const TemporalTape &tape, const Matrix &dL_dO, const Network &net,
                        const NeuronConfig &cfg);

/// Uniform(-b, b) with b = sqrt(6 / fan_in), deterministic in seed.
void init_weights(Network &net, std::uint64_t seed);

/// Mean spike activity per layer (readout entry is 0).
std::vector<double> spike_rate(const TemporalTape &tape);

/// Softmax of O^t, t is 0-based.
std::vector<double> softmax_prediction(const OutputTrace &trace, std::size_t t);

} // namespace spikematch
