#include "spikematch/analysis.hpp"

#include "spikematch/error.hpp"
#include "spikematch/objectives.hpp"
#include "spikematch/parallel.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spikematch {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

std::string num(double v) {
  if (std::isnan(v))
    return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

CosineResult cosine_diversity(const Matrix &features) {
  if (features.cols == 0)
    throw DimensionError("cosine_diversity: feature dimension is 0");
  const std::size_t T = features.rows;
  CosineResult r{Matrix(T, T, kNaN), 0.0, 0};
  std::vector<double> norms(T);
  for (std::size_t i = 0; i < T; ++i)
    norms[i] = norm(features.row(i));
  double sum = 0.0;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = i; j < T; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0)
        continue;
      double dot = 0.0;
      for (std::size_t d = 0; d < features.cols; ++d)
        dot += features(i, d) * features(j, d);
      const double c = i == j ? 1.0 : std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
      r.cosine(i, j) = r.cosine(j, i) = c;
      if (i != j) {
        sum += c;
        ++r.pairs;
      }
    }
  r.mean = r.pairs > 0 ? sum / static_cast<double>(r.pairs) : kNaN;
  return r;
}

Matrix pairwise_kl(const Matrix &dists) {
  if (dists.cols == 0)
    throw DimensionError("pairwise_kl: empty distributions");
  for (std::size_t i = 0; i < dists.rows; ++i) {
    double s = 0.0;
    for (double p : dists.row(i)) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw NumericError("pairwise_kl: row " + std::to_string(i) + " has a negative or non-finite entry");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6)
      throw NumericError("pairwise_kl: row " + std::to_string(i) + " does not sum to 1");
  }
  const std::size_t T = dists.rows;
  Matrix kl(T, T);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < T; ++j) {
      if (i == j)
        continue;
      double s = 0.0;
      for (std::size_t c = 0; c < dists.cols; ++c) {
        const double p = std::max(dists(i, c), 1e-12), q = std::max(dists(j, c), 1e-12);
        s += p * std::log(p / q);
      }
      kl(i, j) = std::max(s, 0.0);
    }
  return kl;
}

double temporal_variance(const Matrix &features) {
  const std::size_t T = features.rows, D = features.cols;
  if (T < 2)
    throw DimensionError("temporal_variance: needs at least 2 time steps");
  if (D == 0)
    throw DimensionError("temporal_variance: feature dimension is 0");
  double total = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      mean += features(t, d);
    mean /= static_cast<double>(T);
    double ss = 0.0;
    for (std::size_t t = 0; t < T; ++t)
      ss += (features(t, d) - mean) * (features(t, d) - mean);
    total += ss / static_cast<double>(T - 1);
  }
  return total / static_cast<double>(D);
}

double effective_rank(const Matrix &features) {
  if (features.rows == 0 || features.cols == 0)
    throw DimensionError("effective_rank: empty matrix");
  Eigen::MatrixXd a(features.rows, features.cols);
  for (std::size_t i = 0; i < features.rows; ++i)
    for (std::size_t j = 0; j < features.cols; ++j)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features(i, j);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  const double tol = sv.size() > 0 ? sv(0) * 1e-12 : 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol)
      sum += sv(i);
  if (!(sum > 0.0))
    throw NumericError("effective_rank: matrix is all zero");
  double h = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) {
      const double p = sv(i) / sum;
      h -= p * std::log(p);
    }
  const double bound = static_cast<double>(std::min(features.rows, features.cols));
  return std::clamp(std::exp(h), 1.0, bound);
}

DiversityReport diversity_report(const Matrix &features, const Matrix &dists) {
  DiversityReport r;
  auto cos = cosine_diversity(features);
  r.cosine = std::move(cos.cosine);
  r.mean_cosine = cos.mean;
  r.kl = pairwise_kl(dists);
  r.temporal_variance = temporal_variance(features);
  bool nonzero = std::any_of(features.data.begin(), features.data.end(), [](double v) { return v != 0.0; });
  r.effective_rank = nonzero ? effective_rank(features) : kNaN;
  return r;
}

DiversityReport average_reports(std::span<const DiversityReport> reports) {
  if (reports.empty())
    throw ContractError("average_reports: no reports");
  const std::size_t T = reports.front().cosine.rows;
  DiversityReport out;
  out.cosine = Matrix(T, T);
  out.kl = Matrix(T, T);
  Matrix cos_n(T, T);
  double mc = 0.0, er = 0.0;
  std::size_t n_mc = 0, n_er = 0;
  for (const auto &r : reports) {
    if (r.cosine.rows != T || r.kl.rows != T)
      throw DimensionError("average_reports: reports disagree on T");
    for (std::size_t k = 0; k < T * T; ++k) {
      if (!std::isnan(r.cosine.data[k])) {
        out.cosine.data[k] += r.cosine.data[k];
        cos_n.data[k] += 1.0;
      }
      out.kl.data[k] += r.kl.data[k] / static_cast<double>(reports.size());
    }
    if (!std::isnan(r.mean_cosine)) {
      mc += r.mean_cosine;
      ++n_mc;
    }
    if (!std::isnan(r.effective_rank)) {
      er += r.effective_rank;
      ++n_er;
    }
    out.temporal_variance += r.temporal_variance / static_cast<double>(reports.size());
  }
  for (std::size_t k = 0; k < T * T; ++k)
    out.cosine.data[k] = cos_n.data[k] > 0 ? out.cosine.data[k] / cos_n.data[k] : kNaN;
  out.mean_cosine = n_mc > 0 ? mc / static_cast<double>(n_mc) : kNaN;
  out.effective_rank = n_er > 0 ? er / static_cast<double>(n_er) : kNaN;
  return out;
}

DiversityReport batch_diversity(const Network &net, const NeuronConfig &neuron, std::size_t T,
                                std::span<const std::vector<double>> inputs, unsigned threads) {
  if (inputs.empty())
    throw ContractError("batch_diversity: no inputs");
  const std::size_t layer = net.last_spiking_layer();
  if (layer == Network::npos)
    throw ContractError("batch_diversity: network has no spiking layer");
  std::vector<DiversityReport> reports(inputs.size());
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    const auto pr = probe(inputs[i], net, T, neuron, layer);
    Matrix dists(T, net.classes());
    for (std::size_t t = 0; t < T; ++t) {
      const auto p = softmax_prediction(pr.trace, t);
      std::copy(p.begin(), p.end(), dists.row(t).begin());
    }
    reports[i] = diversity_report(pr.spikes, dists);
  });
  return average_reports(reports);
}

CalibrationReport ece(std::span<const double> confidences, const std::vector<bool> &correct, std::size_t bins) {
  const std::size_t N = confidences.size();
  if (N == 0)
    throw ContractError("ece: no samples");
  if (correct.size() != N)
    throw DimensionError("ece: confidences and correctness differ in length");
  if (bins == 0)
    throw ContractError("ece: bin count must be >= 1");
  CalibrationReport r;
  r.bins.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    r.bins[b].lo = static_cast<double>(b) / static_cast<double>(bins);
    r.bins[b].hi = static_cast<double>(b + 1) / static_cast<double>(bins);
  }
  for (std::size_t i = 0; i < N; ++i) {
    const double c = confidences[i];
    if (!(c > 0.0 && c <= 1.0))
      throw NumericError("ece: confidence " + num(c) + " outside (0, 1]");
    // Bin b covers (b/bins, (b+1)/bins].
    std::size_t b = static_cast<std::size_t>(std::ceil(c * static_cast<double>(bins))) - 1;
    b = std::min(b, bins - 1);
    if (c <= r.bins[b].lo && b > 0)
      --b;
    else if (c > r.bins[b].hi && b + 1 < bins)
      ++b;
    auto &bin = r.bins[b];
    bin.confidence += c;
    bin.accuracy += correct[i] ? 1.0 : 0.0;
    ++bin.count;
  }
  for (auto &bin : r.bins) {
    if (bin.count == 0)
      continue;
    bin.confidence /= static_cast<double>(bin.count);
    bin.accuracy /= static_cast<double>(bin.count);
    r.ece += static_cast<double>(bin.count) / static_cast<double>(N) * std::abs(bin.accuracy - bin.confidence);
  }
  return r;
}

double utilization_ratio(std::size_t used, std::size_t total) {
  if (total == 0)
    throw ContractError("utilization_ratio: total pair count is 0");
  if (used > total)
    throw ContractError("utilization_ratio: used exceeds total");
  return static_cast<double>(used) / static_cast<double>(total);
}

double membrane_divergence_closed_form(double tau, double u_t_prime, std::span<const double> inputs, std::size_t t,
                                       std::size_t t_prime) {
  if (t_prime >= t)
    throw ContractError("membrane_divergence: need t' < t");
  if (inputs.size() < t)
    throw DimensionError("membrane_divergence: fewer inputs than steps");
  double acc = (std::pow(tau, static_cast<double>(t - t_prime)) - 1.0) * u_t_prime;
  for (std::size_t i = t_prime + 1; i <= t; ++i)
    acc += std::pow(tau, static_cast<double>(t - i)) * inputs[i - 1];
  return std::abs(acc);
}

double membrane_divergence(double tau, std::span<const double> inputs, std::size_t t, std::size_t t_prime) {
  if (t_prime >= t)
    throw ContractError("membrane_divergence: need t' < t");
  if (t_prime < 1)
    throw ContractError("membrane_divergence: t' is 1-based");
  if (inputs.size() < t)
    throw DimensionError("membrane_divergence: fewer inputs than steps");
  double u = 0.0, u_tp = 0.0;
  for (std::size_t i = 1; i <= t; ++i) {
    u = tau * u + inputs[i - 1];
    if (i == t_prime)
      u_tp = u;
  }
  const double sim = std::abs(u - u_tp);
  const double closed = membrane_divergence_closed_form(tau, u_tp, inputs, t, t_prime);
  if (std::abs(sim - closed) > 1e-10 * std::max(1.0, std::abs(sim)))
    throw NumericError("membrane_divergence: simulation " + num(sim) + " disagrees with closed form " + num(closed));
  return sim;
}

double layer_ops(const LayerSpec &spec, double zeta) {
  if (!(zeta >= 0.0 && zeta <= 1.0))
    throw ContractError("layer_ops: activity must lie in [0, 1]");
  double f = 0.0;
  if (spec.kind == LayerKind::conv2d)
    f = static_cast<double>(spec.kernel) * spec.kernel * spec.out_shape.h * spec.out_shape.w * spec.c_in * spec.c_out;
  else
    f = static_cast<double>(spec.in_dim) * spec.out_dim;
  return f * zeta;
}

EnergyReport energy_estimate(std::span<const LayerSpec> layers, std::span<const double> zeta,
                             const EnergyModel &model) {
  if (!(model.e_mac > 0.0 && model.e_ac > 0.0))
    throw ContractError("energy_estimate: energies must be positive");
  if (zeta.size() < layers.size())
    throw ContractError("energy_estimate: missing activity for layer " + std::to_string(zeta.size() + 1));
  EnergyReport r;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerEnergy e;
    e.layer = layers[l].describe();
    e.mac = l == 0;
    e.zeta = e.mac ? 1.0 : zeta[l];
    e.ops = layer_ops(layers[l], e.zeta);
    e.energy = e.ops * (e.mac ? model.e_mac : model.e_ac);
    r.total += e.energy;
    r.layers.push_back(std::move(e));
  }
  return r;
}

std::vector<double> layer_activity(const Network &net, const NeuronConfig &neuron, std::size_t T,
                                   std::span<const std::vector<double>> inputs) {
  if (inputs.empty())
    throw ContractError("layer_activity: at least one sample is needed");
  const std::size_t L = net.layers().size();
  std::vector<double> rate(L, 0.0);
  for (const auto &x : inputs) {
    const auto r = spike_rate(forward_sequence(x, net, T, neuron).tape);
    for (std::size_t l = 0; l < L; ++l)
      rate[l] += r[l] / static_cast<double>(inputs.size());
  }
  std::vector<double> zeta(L, 1.0);
  for (std::size_t l = 1; l < L; ++l)
    zeta[l] = std::clamp(rate[l - 1], 0.0, 1.0);
  return zeta;
}

double energy_from_ops(std::span<const double> ops, const EnergyModel &model) {
  double total = 0.0;
  for (std::size_t l = 0; l < ops.size(); ++l) {
    if (ops[l] < 0.0)
      throw ContractError("energy_from_ops: negative op count");
    total += ops[l] * (l == 0 ? model.e_mac : model.e_ac);
  }
  return total;
}

std::string matrix_csv(const Matrix &m, const std::string &prefix) {
  std::string out = "row";
  for (std::size_t j = 0; j < m.cols; ++j)
    out += "," + prefix + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < m.cols; ++j)
      out += "," + num(m(i, j));
    out += "\n";
  }
  return out;
}

std::string calibration_csv(const CalibrationReport &r) {
  std::string out = "bin,lo,hi,count,confidence,accuracy\n";
  for (std::size_t b = 0; b < r.bins.size(); ++b) {
    const auto &bin = r.bins[b];
    out += std::to_string(b) + "," + num(bin.lo) + "," + num(bin.hi) + "," + std::to_string(bin.count) + "," +
           num(bin.confidence) + "," + num(bin.accuracy) + "\n";
  }
  return out;
}

std::string energy_csv(const EnergyReport &r) {
  std::string out = "layer,kind,zeta,ops,energy_pj\n";
  for (std::size_t l = 0; l < r.layers.size(); ++l) {
    const auto &e = r.layers[l];
    out += std::to_string(l) + "," + (e.mac ? "mac" : "ac") + "," + num(e.zeta) + "," + num(e.ops) + "," +
           num(e.energy) + "\n";
  }
  out += "total,,,," + num(r.total) + "\n";
  return out;
}

std::string diversity_json(const DiversityReport &r) {
  auto mat = [](const Matrix &m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (double v : m.row(i))
        row.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
      rows.push_back(row);
    }
    return rows;
  };
  auto scalar = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j;
  j["mean_cosine"] = scalar(r.mean_cosine);
  j["temporal_variance"] = scalar(r.temporal_variance);
  j["effective_rank"] = scalar(r.effective_rank);
  j["cosine"] = mat(r.cosine);
  j["kl"] = mat(r.kl);
  return j.dump(2) + "\n";
}

} // namespace spikematch
