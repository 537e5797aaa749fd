#pragma once

#include "spikematch/kernels.hpp"

#include <span>
#include <vector>

namespace spikematch {

using simd::ResetKind;

enum class SurrogateKind : unsigned char { triangular = 0, rectangular = 1 };

/// LIF neuron parameters shared by every spiking layer of a network.
struct NeuronConfig {
  double tau = 0.5;    // leakage factor, [0, 1)
  double v_th = 1.0;   // firing threshold, > 0
  ResetKind reset = ResetKind::hard;
  SurrogateKind surrogate = SurrogateKind::triangular;
  double gamma = 1.0;  // triangular surrogate width
  double width = 0.5;  // rectangular surrogate half-width

  // Smooth relaxation used for gradient checking: when > 0 the forward spike
  // is sigmoid(k (u_pre - v_th)) and the backward uses its exact derivative.
  double smooth_k = 0.0;
  // Backward treats the spike as a constant inside the reset multiplication.
  bool detach_reset = true;

  /// Throws ContractError when any field is out of range.
  void validate() const;

  bool smooth() const noexcept { return smooth_k > 0.0; }
  simd::LifParams lif_params() const noexcept { return {tau, v_th, reset}; }
  simd::SurrogateParams surrogate_params() const noexcept;
};

/// u_pre = tau * u_prev + presyn.
std::vector<double> membrane_update(std::span<const double> u_prev, std::span<const double> presyn,
                                    const NeuronConfig &cfg);

/// 1 where u_pre >= v_th (inclusive), else 0.
std::vector<double> fire(std::span<const double> u_pre, const NeuronConfig &cfg);

/// Hard: u_pre * (1 - s). Soft: u_pre - s * v_th.
std::vector<double> reset(std::span<const double> u_pre, std::span<const double> spikes,
                          const NeuronConfig &cfg);

/// ds/du_pre replacing the Heaviside derivative.
std::vector<double> surrogate_gradient(std::span<const double> u_pre, const NeuronConfig &cfg);

struct LifStep {
  std::vector<double> u_post;
  std::vector<double> spikes;
  std::vector<double> u_pre;
};

LifStep lif_step(std::span<const double> u_prev, std::span<const double> presyn,
                 const NeuronConfig &cfg);

/// Throws NumericError on NaN/Inf.
void require_finite(std::span<const double> v, const char *what);

} // namespace spikematch
