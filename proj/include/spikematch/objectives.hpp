#pragma once

#include "spikematch/matrix.hpp"
#include "spikematch/network.hpp"

#include <span>
#include <vector>

namespace spikematch {

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// log(sum(exp(logits))) without overflow.
double log_sum_exp(std::span<const double> logits);

/// H(target, softmax(logits)) in nats. Soft targets are accepted; the target
/// must be non-negative and sum to 1 within 1e-6.
double cross_entropy(std::span<const double> target, std::span<const double> logits);

/// d H(target, softmax(logits)) / d logits = softmax(logits) - target (scaled).
void cross_entropy_grad(std::span<const double> target, std::span<const double> logits,
                        double scale, std::span<double> out);

/// Entropy of a distribution in nats (0 log 0 = 0).
double entropy(std::span<const double> p);

std::vector<double> one_hot(std::size_t label, std::size_t classes);

/// Temporal-efficient-training loss: mean over samples and steps of the
/// per-step cross-entropy.
double tet_loss(std::span<const OutputTrace> traces, std::span<const std::size_t> labels);

/// dL/dO for one sample's share of a TET loss over `batch` samples.
Matrix tet_loss_grad(const OutputTrace &trace, std::size_t label, std::size_t batch);

struct LossTerms {
  double supervised = 0.0;
  double unsupervised = 0.0;
  double lambda = 1.0;
  double total = 0.0;
};

/// L_s + lambda * L_u.
double total_loss(double supervised, double unsupervised, double lambda);

} // namespace spikematch
