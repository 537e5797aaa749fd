#pragma once

#include "spikematch/augment.hpp"
#include "spikematch/config.hpp"
#include "spikematch/data.hpp"
#include "spikematch/matrix.hpp"
#include "spikematch/network.hpp"
#include "spikematch/objectives.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace spikematch {

// ---------------------------------------------------------------------------
// Temporal grouping

/// Contiguous partition of the T steps into M collections (0-based steps).
struct GroupingScheme {
  std::size_t T = 0;
  std::size_t M = 0;
  std::vector<std::size_t> start;  // first step of each collection
  std::vector<std::size_t> size;   // steps per collection

  std::size_t end(std::size_t m) const { return start[m] + size[m]; }
};

/// Equal blocks when M divides T. Otherwise each block gets floor(T/M) steps
/// and the remainder is handed out one step at a time to the outermost
/// blocks, last block first: (4,3) -> {1,1,2}, (8,3) -> {3,2,3}.
GroupingScheme make_grouping(std::size_t T, std::size_t M);

/// Row m = mean of O^t over the steps of collection m.
Matrix group_outputs(const OutputTrace &trace, const GroupingScheme &scheme);

// ---------------------------------------------------------------------------
// Distribution alignment

struct DaState {
  std::vector<double> model_marginal;   // running p~(y)
  std::vector<double> target_marginal;  // p(y)
  double decay = 0.999;

  static DaState uniform(std::size_t classes, double decay = 0.999);
  /// p~ <- decay * p~ + (1 - decay) * batch_mean.
  void observe(std::span<const double> batch_mean);
  /// normalize(q * p / max(p~, 1e-6)).
  std::vector<double> align(std::span<const double> q_raw) const;
};

std::vector<double> distribution_align(std::span<const double> q_raw, const DaState &da);

// ---------------------------------------------------------------------------
// Pseudo-label selection and agreement

struct Selection {
  Matrix q_hat;                     // M x C
  std::vector<std::size_t> source;  // collection each pseudo-label was taken from
  std::vector<std::size_t> c_hat;   // class per collection
};

/// Lowest index wins every tie.
std::size_t argmax(std::span<const double> v);

/// Cross-collection selection: for each m, copy the row of the most
/// confident other collection (confidence = row maximum). Needs M >= 2.
Selection select_pseudo_labels(const Matrix &q);

/// Self selection (intra ablation and the single averaged collection).
Selection select_self(const Matrix &q);

/// agree[m] = 1 iff every collection other than m has the same argmax class.
std::vector<std::uint8_t> agreement_mask(const Matrix &q);

/// Weak/strong collections of one unlabeled sample.
struct CollectionSet {
  Matrix g_weak;    // M x C logits
  Matrix g_strong;  // M x C logits
  Matrix q;         // M x C, aligned softmax of g_weak
  Selection sel;
  std::vector<std::uint8_t> agree;
  std::vector<std::uint8_t> gate;  // agree, and the confidence threshold in threshold mode

  std::size_t used() const;
};

/// Builds q (already aligned by the caller), the selection, the mask and the
/// gate for one sample according to the ablation mode.
void finalize_collection(CollectionSet &cs, Ablation mode, double conf_threshold);

/// (1 / (mu B)) sum_b sum_m gate[m] * H(q_hat^m, g_strong^m); mu B = sets.size().
double unsupervised_loss(std::span<const CollectionSet> sets);

/// dL_u/dO for one sample, scaled by `scale` (lambda / (mu B)).
Matrix unsupervised_loss_grad(const CollectionSet &cs, const OutputTrace &strong, const GroupingScheme &scheme,
                              double scale);

// ---------------------------------------------------------------------------
// Optimizer

/// v <- momentum v + grad + wd * param; param <- param - lr v.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity, double lr,
              double momentum, double weight_decay);
void sgd_step(Network &net, const Gradients &grads, Gradients &velocity, double lr, double momentum,
              double weight_decay);

/// ema <- decay * ema + (1 - decay) * param.
void ema_update(std::span<double> ema, std::span<const double> params, double decay);
void ema_update(Network &ema, const Network &net, double decay);

/// lr * cos(7 pi k / (16 K)).
double cosine_lr(double base, std::uint64_t k, std::uint64_t total);

// ---------------------------------------------------------------------------
// Training

struct TrainState {
  Network model;
  Network ema;
  Gradients velocity;
  DaState da;                       // shared marginal
  std::vector<DaState> da_per_collection;
  std::uint64_t iteration = 0;
};

TrainState make_train_state(const Network &initial, const RunConfig &cfg);

struct IterationReport {
  LossTerms loss;
  std::size_t used_pairs = 0;
  std::size_t total_pairs = 0;
};

struct LabeledBatch {
  std::span<const Image> images;
  std::span<const std::size_t> labels;
};

/// One step of the full procedure: TET loss on weakly augmented labeled data,
/// collections on weak/strong views of the unlabeled batch, alignment,
/// selection, agreement, L = L_s + lambda L_u, STBP, SGD and EMA.
IterationReport train_iteration(TrainState &state, LabeledBatch labeled, std::span<const Image> unlabeled,
                                const RunConfig &cfg, unsigned threads = 1);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class;
  std::vector<double> mean_prediction;  // average softmax of the time-averaged readout
  std::vector<std::size_t> predicted;
  std::vector<double> confidence;
  std::vector<bool> correct;
};

/// Prediction = argmax softmax(mean_t O^t) on clean inputs.
EvalResult evaluate(const Network &net, const NeuronConfig &neuron, std::size_t T, const Dataset &ds,
                    unsigned threads = 1);

struct MetricsRow {
  std::uint64_t iter = 0;
  double loss_s = 0.0;
  double loss_u = 0.0;
  double util_ratio = 0.0;
  double acc = 0.0;
  double ema_acc = 0.0;
  double ece = 0.0;
};

struct TrainingRun {
  TrainState state;
  std::vector<MetricsRow> metrics;
};

/// Runs cfg.iterations iterations with periodic evaluation on `test`.
/// on_eval is called after each metrics row (e.g. to append a CSV line).
TrainingRun run_training(const RunConfig &cfg, const Dataset &train, const Dataset &test, unsigned threads = 1,
                         const std::function<void(const MetricsRow &, const TrainState &)> &on_eval = {});

/// Builds and initializes the configured network for a dataset shape.
Network make_network(const RunConfig &cfg, Shape3 input, std::size_t classes);

} // namespace spikematch
