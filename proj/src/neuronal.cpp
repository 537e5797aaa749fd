#include "spikematch/neuronal.hpp"

#include "spikematch/error.hpp"

#include <cmath>
#include <string>

namespace spikematch {

void NeuronConfig::validate() const {
  if (!(tau >= 0.0 && tau < 1.0))
    throw ContractError("tau must lie in [0, 1), got " + std::to_string(tau));
  if (!(v_th > 0.0))
    throw ContractError("v_th must be > 0");
  if (surrogate == SurrogateKind::triangular && !(gamma > 0.0))
    throw ContractError("triangular surrogate gamma must be > 0");
  if (surrogate == SurrogateKind::rectangular && !(width > 0.0))
    throw ContractError("rectangular surrogate width must be > 0");
  if (smooth_k < 0.0)
    throw ContractError("smooth_k must be >= 0");
}

simd::SurrogateParams NeuronConfig::surrogate_params() const noexcept {
  if (surrogate == SurrogateKind::triangular)
    return {simd::SurrogateParams::triangular, v_th, gamma};
  return {simd::SurrogateParams::rectangular, v_th, width};
}

void require_finite(std::span<const double> v, const char *what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw NumericError(std::string("non-finite value in ") + what);
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char *what) {
  if (a != b)
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                         std::to_string(b) + ")");
}

} // namespace

std::vector<double> membrane_update(std::span<const double> u_prev, std::span<const double> presyn,
                                    const NeuronConfig &cfg) {
  require_same_length(u_prev.size(), presyn.size(), "membrane_update");
  require_finite(u_prev, "membrane_update u_prev");
  require_finite(presyn, "membrane_update presyn");
  std::vector<double> out(presyn.begin(), presyn.end());
  simd::active_kernels().axpy(out.size(), cfg.tau, u_prev.data(), out.data());
  return out;
}

std::vector<double> fire(std::span<const double> u_pre, const NeuronConfig &cfg) {
  require_finite(u_pre, "fire");
  std::vector<double> s(u_pre.size());
  for (std::size_t i = 0; i < u_pre.size(); ++i)
    s[i] = u_pre[i] >= cfg.v_th ? 1.0 : 0.0;
  return s;
}

std::vector<double> reset(std::span<const double> u_pre, std::span<const double> spikes,
                          const NeuronConfig &cfg) {
  require_same_length(u_pre.size(), spikes.size(), "reset");
  require_finite(u_pre, "reset");
  std::vector<double> u(u_pre.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double s = spikes[i];
    if (s != 0.0 && s != 1.0)
      throw ContractError("reset: spike values must be 0 or 1");
    u[i] = cfg.reset == ResetKind::hard ? u_pre[i] * (1.0 - s) : u_pre[i] - s * cfg.v_th;
  }
  return u;
}

std::vector<double> surrogate_gradient(std::span<const double> u_pre, const NeuronConfig &cfg) {
  std::vector<double> out(u_pre.size());
  simd::active_kernels().surrogate(out.size(), cfg.surrogate_params(), u_pre.data(), out.data());
  return out;
}

LifStep lif_step(std::span<const double> u_prev, std::span<const double> presyn,
                 const NeuronConfig &cfg) {
  LifStep step;
  step.u_pre = membrane_update(u_prev, presyn, cfg);
  step.spikes = fire(step.u_pre, cfg);
  step.u_post = reset(step.u_pre, step.spikes, cfg);
  return step;
}

} // namespace spikematch
