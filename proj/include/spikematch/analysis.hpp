#pragma once

#include "spikematch/matrix.hpp"
#include "spikematch/network.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spikematch {

// ---------------------------------------------------------------------------
// Temporal diversity

struct CosineResult {
  Matrix cosine;  // T x T; pairs with a zero row are NaN
  double mean = 0.0;
  std::size_t pairs = 0;  // defined upper-triangle pairs used in the mean
};

/// Cosine similarity between the rows of a T x D feature matrix.
CosineResult cosine_diversity(const Matrix &features);

/// KL(p_i || p_j) between rows of a T x C probability matrix.
Matrix pairwise_kl(const Matrix &dists);

/// Mean over features of the unbiased variance across rows. Needs T >= 2.
double temporal_variance(const Matrix &features);

/// exp(entropy of the normalized singular values).
double effective_rank(const Matrix &features);

struct DiversityReport {
  Matrix cosine;
  double mean_cosine = 0.0;
  Matrix kl;
  double temporal_variance = 0.0;
  double effective_rank = 0.0;
};

/// features: T x D last-layer spike vectors; dists: T x C per-step softmax.
DiversityReport diversity_report(const Matrix &features, const Matrix &dists);

/// Per-sample reports averaged element-wise. Pairs undefined in a sample are
/// skipped for that entry.
DiversityReport average_reports(std::span<const DiversityReport> reports);

/// Runs each input through the network and averages the per-sample reports.
/// Features are the last spiking layer's per-step spikes, distributions the
/// per-step softmax of the readout.
DiversityReport batch_diversity(const Network &net, const NeuronConfig &neuron, std::size_t T,
                                std::span<const std::vector<double>> inputs, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationBin {
  double lo = 0.0, hi = 0.0;
  double confidence = 0.0;  // mean confidence in the bin (0 if empty)
  double accuracy = 0.0;
  std::size_t count = 0;
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
};

/// Equal-width bins (lo, hi] over (0, 1].
CalibrationReport ece(std::span<const double> confidences, const std::vector<bool> &correct,
                      std::size_t bins = 10);

// ---------------------------------------------------------------------------
// Utilization and membrane divergence

double utilization_ratio(std::size_t used, std::size_t total);

/// |u(t) - u(t')| for a non-firing leaky membrane driven by inputs[i] at step
/// i (1-based, inputs[0] is step 1) and started from u(0) = 0. The simulated
/// value is returned after checking it against the closed form.
double membrane_divergence(double tau, std::span<const double> inputs, std::size_t t, std::size_t t_prime);

/// Closed form of the same quantity given u(t').
double membrane_divergence_closed_form(double tau, double u_t_prime, std::span<const double> inputs, std::size_t t,
                                       std::size_t t_prime);

// ---------------------------------------------------------------------------
// Synaptic energy

struct EnergyModel {
  double e_mac = 4.6;  // pJ
  double e_ac = 0.9;   // pJ
};

struct LayerEnergy {
  std::string layer;
  double zeta = 1.0;
  double ops = 0.0;  // F_l
  bool mac = false;
  double energy = 0.0;  // pJ
};

struct EnergyReport {
  std::vector<LayerEnergy> layers;
  double total = 0.0;
};

/// Dense ops in*out, conv ops k^2 * H_out * W_out * C_in * C_out, times zeta.
double layer_ops(const LayerSpec &spec, double zeta);

/// zeta[l] is the input activity of layer l; zeta[0] is ignored (the first
/// layer sees real-valued input and is charged as MACs).
EnergyReport energy_estimate(std::span<const LayerSpec> layers, std::span<const double> zeta,
                             const EnergyModel &model = {});

/// Mean input activity of every layer over a batch: entry l is the spike
/// rate of layer l-1 (entry 0 is 1).
std::vector<double> layer_activity(const Network &net, const NeuronConfig &neuron, std::size_t T,
                                   std::span<const std::vector<double>> inputs);

/// F_1 E_MAC + sum_{l>=2} F_l E_AC for precomputed op counts.
double energy_from_ops(std::span<const double> ops, const EnergyModel &model = {});

// ---------------------------------------------------------------------------
// Serialization

/// Header row then one row per matrix row; NaN written as "nan".
std::string matrix_csv(const Matrix &m, const std::string &prefix);
std::string calibration_csv(const CalibrationReport &r);
std::string energy_csv(const EnergyReport &r);
std::string diversity_json(const DiversityReport &r);

} // namespace spikematch
