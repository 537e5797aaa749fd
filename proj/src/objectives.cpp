#include "spikematch/objectives.hpp"

#include "spikematch/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace spikematch {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty())
    throw DimensionError("softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    sum += p[i];
  }
  for (double &v : p)
    v /= sum;
  return p;
}

double log_sum_exp(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits)
    sum += std::exp(v - peak);
  return peak + std::log(sum);
}

namespace {

void check_target(std::span<const double> target, std::size_t n) {
  if (target.size() != n)
    throw DimensionError("cross_entropy: target has " + std::to_string(target.size()) +
                         " classes, logits " + std::to_string(n));
  double sum = 0.0;
  for (double t : target) {
    if (!(t >= 0.0) || !std::isfinite(t))
      throw ContractError("cross_entropy: target entries must be finite and non-negative");
    sum += t;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw ContractError("cross_entropy: target must sum to 1");
}

} // namespace

double cross_entropy(std::span<const double> target, std::span<const double> logits) {
  check_target(target, logits.size());
  const double lse = log_sum_exp(logits);
  double h = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c)
    if (target[c] != 0.0)
      h -= target[c] * (logits[c] - lse);
  // Rounding can leave a tiny negative value when the prediction is exact.
  return std::max(h, 0.0);
}

void cross_entropy_grad(std::span<const double> target, std::span<const double> logits,
                        double scale, std::span<double> out) {
  const auto p = softmax(logits);
  for (std::size_t c = 0; c < p.size(); ++c)
    out[c] += scale * (p[c] - target[c]);
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0)
      h -= v * std::log(v);
  return h;
}

std::vector<double> one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes)
    throw ContractError("label " + std::to_string(label) + " out of range");
  std::vector<double> v(classes, 0.0);
  v[label] = 1.0;
  return v;
}

double tet_loss(std::span<const OutputTrace> traces, std::span<const std::size_t> labels) {
  if (traces.empty())
    throw DimensionError("tet_loss: empty batch");
  if (traces.size() != labels.size())
    throw DimensionError("tet_loss: traces and labels differ in batch size");
  const std::size_t T = traces.front().steps();
  if (T == 0)
    throw DimensionError("tet_loss: T must be >= 1");
  double sum = 0.0;
  for (std::size_t b = 0; b < traces.size(); ++b) {
    const Matrix &O = traces[b].O;
    if (O.rows != T)
      throw DimensionError("tet_loss: inconsistent T across the batch");
    const auto y = one_hot(labels[b], O.cols);
    for (std::size_t t = 0; t < T; ++t)
      sum += cross_entropy(y, O.row(t));
  }
  return sum / static_cast<double>(traces.size() * T);
}

Matrix tet_loss_grad(const OutputTrace &trace, std::size_t label, std::size_t batch) {
  const Matrix &O = trace.O;
  Matrix grad(O.rows, O.cols);
  const auto y = one_hot(label, O.cols);
  const double scale = 1.0 / static_cast<double>(batch * O.rows);
  for (std::size_t t = 0; t < O.rows; ++t)
    cross_entropy_grad(y, O.row(t), scale, grad.row(t));
  return grad;
}

double total_loss(double supervised, double unsupervised, double lambda) {
  if (!(lambda >= 0.0))
    throw ContractError("lambda must be >= 0");
  if (lambda == 0.0)
    return supervised;
  return supervised + lambda * unsupervised;
}

} // namespace spikematch
