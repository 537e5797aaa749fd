#include "spikematch/spikematch.hpp"

#include "spikematch/analysis.hpp"
#include "spikematch/error.hpp"
#include "spikematch/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace spikematch {

GroupingScheme make_grouping(std::size_t T, std::size_t M) {
  if (T == 0 || M == 0)
    throw ContractError("make_grouping: T and M must be >= 1");
  if (M > T)
    throw ContractError("make_grouping: M = " + std::to_string(M) + " exceeds T = " + std::to_string(T));
  GroupingScheme g;
  g.T = T;
  g.M = M;
  g.size.assign(M, T / M);
  // Remainder goes to the outermost collections, alternating from the last.
  std::size_t lo = 0, hi = M - 1;
  for (std::size_t r = 0; r < T % M; ++r)
    ++g.size[r % 2 == 0 ? hi-- : lo++];
  g.start.resize(M);
  std::size_t at = 0;
  for (std::size_t m = 0; m < M; ++m) {
    g.start[m] = at;
    at += g.size[m];
  }
  return g;
}

Matrix group_outputs(const OutputTrace &trace, const GroupingScheme &scheme) {
  if (trace.steps() != scheme.T)
    throw DimensionError("group_outputs: trace has " + std::to_string(trace.steps()) + " steps, grouping expects " +
                         std::to_string(scheme.T));
  const std::size_t C = trace.O.cols;
  Matrix g(scheme.M, C);
  for (std::size_t m = 0; m < scheme.M; ++m) {
    auto row = g.row(m);
    for (std::size_t t = scheme.start[m]; t < scheme.end(m); ++t)
      for (std::size_t c = 0; c < C; ++c)
        row[c] += trace.O(t, c);
    for (double &v : row)
      v /= static_cast<double>(scheme.size[m]);
  }
  return g;
}

DaState DaState::uniform(std::size_t classes, double decay) {
  DaState da;
  da.model_marginal.assign(classes, 1.0 / static_cast<double>(classes));
  da.target_marginal = da.model_marginal;
  da.decay = decay;
  return da;
}

void DaState::observe(std::span<const double> batch_mean) {
  if (batch_mean.size() != model_marginal.size())
    throw DimensionError("DaState::observe: class count mismatch");
  for (std::size_t c = 0; c < batch_mean.size(); ++c)
    model_marginal[c] = decay * model_marginal[c] + (1.0 - decay) * batch_mean[c];
}

std::vector<double> DaState::align(std::span<const double> q_raw) const {
  if (q_raw.size() != model_marginal.size() || q_raw.size() != target_marginal.size())
    throw DimensionError("distribution_align: class count mismatch");
  std::vector<double> out(q_raw.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = q_raw[c] * target_marginal[c] / std::max(model_marginal[c], 1e-6);
    sum += out[c];
  }
  if (!(sum > 0.0))
    throw NumericError("distribution_align: aligned distribution has zero mass");
  for (double &v : out)
    v /= sum;
  return out;
}

std::vector<double> distribution_align(std::span<const double> q_raw, const DaState &da) { return da.align(q_raw); }

std::size_t argmax(std::span<const double> v) {
  if (v.empty())
    throw DimensionError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best])
      best = i;
  return best;
}

namespace {

double row_max(std::span<const double> r) { return *std::max_element(r.begin(), r.end()); }

} // namespace

Selection select_pseudo_labels(const Matrix &q) {
  const std::size_t M = q.rows;
  if (M < 2)
    throw ContractError("select_pseudo_labels: cross-selection needs M >= 2; use the averaged path for M = 1");
  std::vector<double> conf(M);
  for (std::size_t j = 0; j < M; ++j)
    conf[j] = row_max(q.row(j));
  Selection s{Matrix(M, q.cols), std::vector<std::size_t>(M), std::vector<std::size_t>(M)};
  for (std::size_t m = 0; m < M; ++m) {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < M; ++j)
      if (j != m && (!best || conf[j] > conf[*best]))
        best = j;
    s.source[m] = *best;
    const auto src = q.row(*best);
    std::copy(src.begin(), src.end(), s.q_hat.row(m).begin());
    s.c_hat[m] = argmax(src);
  }
  return s;
}

Selection select_self(const Matrix &q) {
  Selection s{q, std::vector<std::size_t>(q.rows), std::vector<std::size_t>(q.rows)};
  for (std::size_t m = 0; m < q.rows; ++m) {
    s.source[m] = m;
    s.c_hat[m] = argmax(q.row(m));
  }
  return s;
}

std::vector<std::uint8_t> agreement_mask(const Matrix &q) {
  const std::size_t M = q.rows;
  if (M == 0)
    throw ContractError("agreement_mask: M must be >= 1");
  std::vector<std::size_t> cls(M);
  for (std::size_t j = 0; j < M; ++j)
    cls[j] = argmax(q.row(j));
  std::vector<std::uint8_t> agree(M, 1);
  for (std::size_t m = 0; m < M; ++m) {
    std::optional<std::size_t> shared;
    for (std::size_t j = 0; j < M && agree[m]; ++j) {
      if (j == m)
        continue;
      if (!shared)
        shared = cls[j];
      else if (cls[j] != *shared)
        agree[m] = 0;
    }
  }
  return agree;
}

std::size_t CollectionSet::used() const {
  std::size_t n = 0;
  for (auto g : gate)
    n += g;
  return n;
}

void finalize_collection(CollectionSet &cs, Ablation mode, double conf_threshold) {
  const std::size_t M = cs.q.rows;
  if ((mode == Ablation::averaged) != (M == 1))
    throw ContractError("collection count " + std::to_string(M) + " is inconsistent with ablation mode " +
                        std::string(ablation_name(mode)));
  switch (mode) {
  case Ablation::averaged:
    cs.sel = select_self(cs.q);
    cs.agree.assign(1, 1);
    break;
  case Ablation::intra:
    cs.sel = select_self(cs.q);
    cs.agree = agreement_mask(cs.q);
    break;
  default:
    cs.sel = select_pseudo_labels(cs.q);
    cs.agree = agreement_mask(cs.q);
    break;
  }
  cs.gate = cs.agree;
  if (mode == Ablation::threshold)
    for (std::size_t m = 0; m < M; ++m)
      if (row_max(cs.sel.q_hat.row(m)) < conf_threshold)
        cs.gate[m] = 0;
}

double unsupervised_loss(std::span<const CollectionSet> sets) {
  if (sets.empty())
    return 0.0;
  double sum = 0.0;
  for (const auto &cs : sets) {
    if (cs.g_strong.rows != cs.sel.q_hat.rows || cs.gate.size() != cs.g_strong.rows)
      throw DimensionError("unsupervised_loss: collection shapes disagree");
    for (std::size_t m = 0; m < cs.gate.size(); ++m)
      if (cs.gate[m])
        sum += cross_entropy(cs.sel.q_hat.row(m), cs.g_strong.row(m));
  }
  return sum / static_cast<double>(sets.size());
}

Matrix unsupervised_loss_grad(const CollectionSet &cs, const OutputTrace &strong, const GroupingScheme &scheme,
                              double scale) {
  Matrix grad(strong.steps(), strong.O.cols);
  std::vector<double> g(strong.O.cols);
  for (std::size_t m = 0; m < scheme.M; ++m) {
    if (!cs.gate[m])
      continue;
    std::fill(g.begin(), g.end(), 0.0);
    cross_entropy_grad(cs.sel.q_hat.row(m), cs.g_strong.row(m), scale / static_cast<double>(scheme.size[m]), g);
    for (std::size_t t = scheme.start[m]; t < scheme.end(m); ++t)
      for (std::size_t c = 0; c < g.size(); ++c)
        grad(t, c) += g[c];
  }
  return grad;
}

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity, double lr,
              double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size())
    throw DimensionError("sgd_step: parameter, gradient and velocity sizes differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i] + weight_decay * params[i];
    params[i] -= lr * velocity[i];
  }
}

void sgd_step(Network &net, const Gradients &grads, Gradients &velocity, double lr, double momentum,
              double weight_decay) {
  if (grads.size() != net.weights.size() || velocity.size() != net.weights.size())
    throw DimensionError("sgd_step: layer count mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    sgd_step(net.weights[l], grads[l], velocity[l], lr, momentum, weight_decay);
}

void ema_update(std::span<double> ema, std::span<const double> params, double decay) {
  if (ema.size() != params.size())
    throw DimensionError("ema_update: size mismatch");
  for (std::size_t i = 0; i < ema.size(); ++i)
    ema[i] = decay * ema[i] + (1.0 - decay) * params[i];
}

void ema_update(Network &ema, const Network &net, double decay) {
  if (ema.weights.size() != net.weights.size())
    throw DimensionError("ema_update: layer count mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    ema_update(ema.weights[l], net.weights[l], decay);
}

double cosine_lr(double base, std::uint64_t k, std::uint64_t total) {
  if (total == 0)
    return base;
  return base * std::cos(7.0 * std::numbers::pi * static_cast<double>(k) / (16.0 * static_cast<double>(total)));
}

TrainState make_train_state(const Network &initial, const RunConfig &cfg) {
  TrainState st;
  st.model = initial;
  st.ema = initial;
  st.velocity = zero_gradients(initial);
  st.da = DaState::uniform(initial.classes(), cfg.da_decay);
  st.da_per_collection.assign(cfg.collections(), st.da);
  return st;
}

namespace {

constexpr std::size_t kChunk = 8;

void add_into(Gradients &dst, const Gradients &src) {
  for (std::size_t l = 0; l < dst.size(); ++l)
    for (std::size_t i = 0; i < dst[l].size(); ++i)
      dst[l][i] += src[l][i];
}

void align_batch(std::vector<CollectionSet> &sets, TrainState &st, const RunConfig &cfg) {
  if (sets.empty())
    return;
  const std::size_t M = sets.front().q.rows, C = sets.front().q.cols;
  if (cfg.ablation == Ablation::no_da)
    return;
  if (cfg.da_per_collection) {
    for (std::size_t m = 0; m < M; ++m) {
      std::vector<double> mean(C, 0.0);
      for (const auto &cs : sets)
        for (std::size_t c = 0; c < C; ++c)
          mean[c] += cs.q(m, c);
      for (double &v : mean)
        v /= static_cast<double>(sets.size());
      st.da_per_collection[m].observe(mean);
    }
    for (auto &cs : sets)
      for (std::size_t m = 0; m < M; ++m) {
        const auto aligned = st.da_per_collection[m].align(cs.q.row(m));
        std::copy(aligned.begin(), aligned.end(), cs.q.row(m).begin());
      }
    return;
  }
  std::vector<double> mean(C, 0.0);
  for (const auto &cs : sets)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t c = 0; c < C; ++c)
        mean[c] += cs.q(m, c);
  for (double &v : mean)
    v /= static_cast<double>(sets.size() * M);
  st.da.observe(mean);
  for (auto &cs : sets)
    for (std::size_t m = 0; m < M; ++m) {
      const auto aligned = st.da.align(cs.q.row(m));
      std::copy(aligned.begin(), aligned.end(), cs.q.row(m).begin());
    }
}

} // namespace

IterationReport train_iteration(TrainState &state, LabeledBatch labeled, std::span<const Image> unlabeled,
                                const RunConfig &cfg, unsigned threads) {
  cfg.validate();
  const std::size_t B = labeled.images.size();
  if (B == 0)
    throw ContractError("train_iteration: labeled batch is empty");
  if (labeled.labels.size() != B)
    throw DimensionError("train_iteration: labeled images and labels differ in count");
  const std::size_t U = unlabeled.size();
  const NeuronConfig &neuron = cfg.neuron;
  const Network &net = state.model;
  const GroupingScheme scheme = make_grouping(cfg.T, cfg.collections());
  const CounterRng aug = purpose_stream(cfg.seed, RngPurpose::augment).substream(state.iteration);

  // Weak views of the unlabeled batch give the pseudo-labels; no gradient
  // flows through this branch.
  std::vector<CollectionSet> sets(U);
  std::vector<Image> strong_views(U);
  parallel_for(U, threads, [&](std::size_t b) {
    CounterRng rw = aug.substream(1, b), rs = aug.substream(2, b);
    const Image weak = weak_augment(unlabeled[b], rw);
    strong_views[b] = strong_augment(weak_augment(unlabeled[b], rs), cfg.randaug_n, cfg.randaug_magnitude, rs);
    sets[b].g_weak = group_outputs(infer(weak.px, net, cfg.T, neuron), scheme);
    Matrix q(scheme.M, net.classes());
    for (std::size_t m = 0; m < scheme.M; ++m) {
      const auto p = softmax(sets[b].g_weak.row(m));
      std::copy(p.begin(), p.end(), q.row(m).begin());
    }
    sets[b].q = std::move(q);
  });
  align_batch(sets, state, cfg);
  for (auto &cs : sets)
    finalize_collection(cs, cfg.ablation, cfg.conf_threshold);

  // Labeled items first, then strong unlabeled views. Items are grouped in
  // fixed chunks whose gradients are summed in chunk order, so the thread
  // count never changes the result.
  const bool unsup_grad = cfg.lambda > 0.0 && U > 0;
  const std::size_t items = B + U;
  const std::size_t chunks = (items + kChunk - 1) / kChunk;
  std::vector<std::optional<Gradients>> chunk_grads(chunks);
  std::vector<double> sup_terms(B, 0.0);
  const double unsup_scale = U > 0 ? cfg.lambda / static_cast<double>(U) : 0.0;

  parallel_for(chunks, threads, [&](std::size_t k) {
    for (std::size_t i = k * kChunk; i < std::min(items, (k + 1) * kChunk); ++i) {
      if (i < B) {
        CounterRng r = aug.substream(0, i);
        const Image view = weak_augment(labeled.images[i], r);
        const auto fwd = forward_sequence(view.px, net, cfg.T, neuron);
        const auto y = one_hot(labeled.labels[i], net.classes());
        double sum = 0.0;
        for (std::size_t t = 0; t < cfg.T; ++t)
          sum += cross_entropy(y, fwd.trace.O.row(t));
        sup_terms[i] = sum;
        if (!chunk_grads[k])
          chunk_grads[k] = zero_gradients(net);
        backward_stbp(fwd.tape, tet_loss_grad(fwd.trace, labeled.labels[i], B), net, neuron, *chunk_grads[k]);
      } else {
        const std::size_t b = i - B;
        CollectionSet &cs = sets[b];
        if (unsup_grad && cs.used() > 0) {
          const auto fwd = forward_sequence(strong_views[b].px, net, cfg.T, neuron);
          cs.g_strong = group_outputs(fwd.trace, scheme);
          if (!chunk_grads[k])
            chunk_grads[k] = zero_gradients(net);
          backward_stbp(fwd.tape, unsupervised_loss_grad(cs, fwd.trace, scheme, unsup_scale), net, neuron,
                        *chunk_grads[k]);
        } else {
          cs.g_strong = group_outputs(infer(strong_views[b].px, net, cfg.T, neuron), scheme);
        }
      }
    }
  });

  Gradients grads = zero_gradients(net);
  for (auto &g : chunk_grads)
    if (g)
      add_into(grads, *g);

  IterationReport rep;
  double sup = 0.0;
  for (double v : sup_terms)
    sup += v;
  rep.loss.supervised = sup / static_cast<double>(B * cfg.T);
  rep.loss.unsupervised = unsupervised_loss(sets);
  rep.loss.lambda = cfg.lambda;
  rep.loss.total = total_loss(rep.loss.supervised, rep.loss.unsupervised, cfg.lambda);
  for (const auto &cs : sets)
    rep.used_pairs += cs.used();
  rep.total_pairs = U * scheme.M;

  const double lr = cosine_lr(cfg.lr, state.iteration, cfg.iterations);
  sgd_step(state.model, grads, state.velocity, lr, cfg.momentum, cfg.weight_decay);
  ema_update(state.ema, state.model, cfg.ema_decay);
  ++state.iteration;
  return rep;
}

EvalResult evaluate(const Network &net, const NeuronConfig &neuron, std::size_t T, const Dataset &ds,
                    unsigned threads) {
  if (ds.size() == 0)
    throw ContractError("evaluate: empty dataset");
  const std::size_t N = ds.size(), C = net.classes();
  EvalResult r;
  r.predicted.resize(N);
  r.confidence.resize(N);
  r.correct.resize(N);
  std::vector<std::vector<double>> probs(N);
  parallel_for(N, threads, [&](std::size_t i) {
    const auto trace = infer(ds.image_f64(i), net, T, neuron);
    std::vector<double> mean(C, 0.0);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c)
        mean[c] += trace.O(t, c);
    for (double &v : mean)
      v /= static_cast<double>(T);
    probs[i] = softmax(mean);
    r.predicted[i] = argmax(probs[i]);
    r.confidence[i] = probs[i][r.predicted[i]];
  });
  std::vector<double> hits(C, 0.0), counts(C, 0.0);
  r.mean_prediction.assign(C, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const bool ok = r.predicted[i] == ds.labels[i];
    r.correct[i] = ok;
    correct += ok;
    counts[ds.labels[i]] += 1.0;
    hits[ds.labels[i]] += ok ? 1.0 : 0.0;
    for (std::size_t c = 0; c < C; ++c)
      r.mean_prediction[c] += probs[i][c] / static_cast<double>(N);
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(N);
  r.per_class.resize(C);
  for (std::size_t c = 0; c < C; ++c)
    r.per_class[c] = counts[c] > 0 ? hits[c] / counts[c] : 0.0;
  return r;
}

Network make_network(const RunConfig &cfg, Shape3 input, std::size_t classes) {
  Network net = build_network(input, classes, cfg.arch);
  net.readout_mode = cfg.readout_accumulate ? ReadoutMode::accumulate : ReadoutMode::instantaneous;
  init_weights(net, cfg.seed);
  return net;
}

TrainingRun run_training(const RunConfig &cfg, const Dataset &train, const Dataset &test, unsigned threads,
                         const std::function<void(const MetricsRow &, const TrainState &)> &on_eval) {
  cfg.validate();
  train.validate();
  test.validate();
  if (train.shape != test.shape || train.classes != test.classes)
    throw DimensionError("train and test datasets differ in shape or class count");

  TrainingRun run;
  run.state = make_train_state(make_network(cfg, train.shape, train.classes), cfg);
  const SslSplit split = make_split(train, cfg.labels_per_class, cfg.seed, cfg.unlabeled_includes_labeled);
  BatchSampler sampler(split, cfg.batch, cfg.mu, cfg.seed);
  const bool use_unlabeled = cfg.lambda > 0.0 && !split.unlabeled.empty();

  std::vector<Image> images(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    images[i] = Image::from(train.shape, train.image(i));

  std::vector<Image> lab_imgs, unl_imgs;
  std::vector<std::size_t> lab_labels;
  double acc_s = 0.0, acc_u = 0.0;
  std::size_t used = 0, total = 0, since = 0;

  for (std::uint64_t it = 0; it < cfg.iterations; ++it) {
    const BatchIndices bi = sampler.next();
    lab_imgs.clear();
    lab_labels.clear();
    unl_imgs.clear();
    for (auto i : bi.labeled) {
      lab_imgs.push_back(images[i]);
      lab_labels.push_back(train.labels[i]);
    }
    if (use_unlabeled)
      for (auto i : bi.unlabeled)
        unl_imgs.push_back(images[i]);

    const auto rep = train_iteration(run.state, LabeledBatch{lab_imgs, lab_labels}, unl_imgs, cfg, threads);
    acc_s += rep.loss.supervised;
    acc_u += rep.loss.unsupervised;
    used += rep.used_pairs;
    total += rep.total_pairs;
    ++since;

    if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations) {
      MetricsRow row;
      row.iter = it + 1;
      row.loss_s = acc_s / static_cast<double>(since);
      row.loss_u = acc_u / static_cast<double>(since);
      row.util_ratio = total > 0 ? utilization_ratio(used, total) : 0.0;
      const auto model_eval = evaluate(run.state.model, cfg.neuron, cfg.T, test, threads);
      const auto ema_eval = evaluate(run.state.ema, cfg.neuron, cfg.T, test, threads);
      row.acc = model_eval.accuracy;
      row.ema_acc = ema_eval.accuracy;
      row.ece = ece(ema_eval.confidence, ema_eval.correct).ece;
      run.metrics.push_back(row);
      if (on_eval)
        on_eval(row, run.state);
      acc_s = acc_u = 0.0;
      used = total = since = 0;
    }
  }
  return run;
}

} // namespace spikematch
