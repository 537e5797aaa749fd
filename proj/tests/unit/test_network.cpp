#include <doctest.h>

#include "../support/oracles.hpp"

#include "spikematch/checkpoint.hpp"
#include "spikematch/error.hpp"
#include "spikematch/network.hpp"
#include "spikematch/objectives.hpp"

#include <cmath>
#include <filesystem>

using namespace spikematch;

namespace {

void check_against_oracle(const Network &net, const std::vector<double> &x, std::size_t T, const NeuronConfig &cfg) {
  const auto fwd = forward_sequence(x, net, T, cfg);
  const auto sim = oracle::simulate(x, net, T, cfg.tau, cfg.v_th, cfg.reset == ResetKind::soft);
  for (std::size_t l = 0; l < sim.spikes.size(); ++l) {
    CHECK(fwd.tape.layers[l].spikes == sim.spikes[l]);
    for (std::size_t k = 0; k < sim.u_pre[l].data.size(); ++k)
      CHECK(std::abs(fwd.tape.layers[l].u_pre.data[k] - sim.u_pre[l].data[k]) <= 1e-10);
  }
  for (std::size_t k = 0; k < sim.O.data.size(); ++k)
    CHECK(std::abs(fwd.trace.O.data[k] - sim.O.data[k]) <= 1e-10);
  CHECK(infer(x, net, T, cfg).O == fwd.trace.O);
}

} // namespace

TEST_SUITE("network") {

TEST_CASE("build_network parses the architecture string") {
  const Network net = build_network({1, 8, 8}, 3, "conv(4,3,1,pool),dense(10)");
  REQUIRE(net.layers().size() == 3);
  CHECK(net.layers()[0].kind == LayerKind::conv2d);
  CHECK(net.layers()[0].out_shape == Shape3{4, 8, 8});
  CHECK(net.layers()[0].feed_shape == Shape3{4, 4, 4});
  CHECK(net.layers()[1].in_dim == 64);
  CHECK(net.layers()[2].kind == LayerKind::readout);
  CHECK(net.classes() == 3);
  CHECK(net.last_spiking_layer() == 1);
  CHECK_THROWS(build_network({1, 8, 8}, 3, "conv(4,3)"));
  CHECK_THROWS(build_network({1, 8, 8}, 3, "bogus(3)"));
  CHECK_THROWS(build_network({1, 7, 7}, 3, "conv(4,3,1,pool)"));
}

TEST_CASE("readout placement is validated") {
  CHECK_THROWS_AS(Network({4, 1, 1}, {LayerSpec::dense(4, 3)}), ContractError);
  CHECK_THROWS_AS(Network({4, 1, 1}, {LayerSpec::readout(4, 3), LayerSpec::readout(3, 2)}), ContractError);
  CHECK_THROWS_AS(Network({4, 1, 1}, {LayerSpec::dense(5, 3), LayerSpec::readout(3, 2)}), DimensionError);
}

TEST_CASE("zero weights give a zero readout") {
  Network net({3, 1, 1}, {LayerSpec::dense(3, 4), LayerSpec::readout(4, 2)});
  const auto r = forward_sequence(std::vector<double>{1, 2, 3}, net, 4, {});
  CHECK(r.trace.O == Matrix(4, 2));
}

TEST_CASE("a silent layer gives a zero readout under identity weights") {
  Network net({1, 1, 1}, {LayerSpec::dense(1, 1), LayerSpec::readout(1, 1)});
  net.weights[0] = {0.1};
  net.weights[1] = {1.0};
  const auto r = forward_sequence(std::vector<double>{0.5}, net, 6, {});
  CHECK(r.trace.O == Matrix(6, 1));
}

TEST_CASE("forward matches the scalar oracle on random dense nets") {
  CounterRng rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t in_dim = 0;
    const Network net = oracle::random_dense_net(rng, 3, 16, in_dim);
    NeuronConfig cfg;
    cfg.tau = rng.uniform(0.0, 0.95);
    cfg.reset = rng.bernoulli(0.5) ? ResetKind::soft : ResetKind::hard;
    check_against_oracle(net, oracle::random_vector(rng, in_dim, -1, 2), 1 + rng.below(8), cfg);
  }
}

TEST_CASE("forward matches the scalar oracle on conv nets with pooling") {
  CounterRng rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    Network net = build_network({2, 6, 6}, 3, trial % 2 ? "conv(3,3,1,pool),dense(5)" : "conv(2,3,0),conv(3,3,1)");
    for (auto &W : net.weights)
      for (double &w : W)
        w = rng.uniform(-1, 1.5);
    if (trial % 3 == 0)
      net.readout_mode = ReadoutMode::accumulate;
    NeuronConfig cfg;
    cfg.tau = rng.uniform(0.0, 0.9);
    cfg.reset = trial % 2 ? ResetKind::soft : ResetKind::hard;
    check_against_oracle(net, oracle::random_vector(rng, 72, 0, 1), 5, cfg);
  }
}

TEST_CASE("property: readout at t depends only on spikes at t") {
  CounterRng rng(5);
  std::size_t in_dim = 0;
  Network net = oracle::random_dense_net(rng, 3, 12, in_dim);
  const auto x = oracle::random_vector(rng, in_dim, 0, 2);
  const auto r = forward_sequence(x, net, 5, {});
  const std::size_t last = net.last_spiking_layer();
  const auto &W = net.weights.back();
  const std::size_t n = net.layers().back().in_dim;
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < net.classes(); ++c) {
      double o = 0;
      for (std::size_t i = 0; i < n; ++i)
        o += W[c * n + i] * r.tape.layers[last].spikes(t, i);
      CHECK(r.trace.O(t, c) == doctest::Approx(o).epsilon(1e-12));
    }
}

TEST_CASE("softmax_prediction") {
  OutputTrace tr{Matrix(2, 3)};
  tr.O(1, 0) = std::log(1.0);
  tr.O(1, 1) = std::log(2.0);
  tr.O(1, 2) = std::log(3.0);
  CHECK(softmax_prediction(tr, 0)[1] == doctest::Approx(1.0 / 3));
  CHECK(softmax_prediction(tr, 1)[2] == doctest::Approx(0.5));
  CHECK_THROWS(softmax_prediction(tr, 2));
}

TEST_CASE("backward: zero upstream gradient gives zero gradients") {
  CounterRng rng(8);
  std::size_t in_dim = 0;
  const Network net = oracle::random_dense_net(rng, 3, 10, in_dim);
  const auto fwd = forward_sequence(oracle::random_vector(rng, in_dim, 0, 2), net, 4, {});
  const auto g = backward_stbp(fwd.tape, Matrix(4, net.classes()), net, {});
  for (const auto &layer : g)
    for (double v : layer)
      CHECK(v == 0.0);
}

TEST_CASE("backward: a lone readout at T=1 is a linear map") {
  Network net({3, 1, 1}, {LayerSpec::readout(3, 2)});
  net.weights[0] = {0.1, -0.2, 0.3, 0.4, 0.5, -0.6};
  const std::vector<double> x{1.0, 2.0, -1.0};
  const auto fwd = forward_sequence(x, net, 1, {});
  Matrix d(1, 2);
  d(0, 0) = 0.7;
  d(0, 1) = -1.3;
  const auto g = backward_stbp(fwd.tape, d, net, {});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(g[0][c * 3 + i] == doctest::Approx(d(0, c) * x[i]));
}

TEST_CASE("backward matches finite differences in smooth-relaxation mode") {
  CounterRng rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    Network net = trial < 3 ? Network({5, 1, 1}, {LayerSpec::dense(5, 7), LayerSpec::dense(7, 6), LayerSpec::readout(6, 3)})
                            : build_network({1, 6, 6}, 3, "conv(2,3,1,pool),dense(4)");
    for (auto &W : net.weights)
      for (double &w : W)
        w = rng.uniform(-1, 1);
    NeuronConfig cfg;
    cfg.smooth_k = 4.0;
    cfg.detach_reset = false;
    cfg.reset = trial % 2 ? ResetKind::soft : ResetKind::hard;
    const auto x = oracle::random_vector(rng, net.input_shape().size(), 0, 1.5);
    const std::size_t label = 1;
    auto loss = [&](const Network &n) {
      const auto tr = infer(x, n, 4, cfg);
      double s = 0;
      for (std::size_t t = 0; t < 4; ++t)
        s += cross_entropy(one_hot(label, 3), tr.O.row(t));
      return s / 4;
    };
    const auto fwd = forward_sequence(x, net, 4, cfg);
    const auto g = backward_stbp(fwd.tape, tet_loss_grad(fwd.trace, label, 1), net, cfg);
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t l = 0; l < net.weights.size(); ++l)
      for (std::size_t i = 0; i < net.weights[l].size(); i += 3)
        coords.emplace_back(l, i);
    const auto r = oracle::finite_difference_check(net, g, loss, coords, 1e-5);
    CHECK(r.max_rel <= 1e-4);
  }
}

TEST_CASE("init_weights is deterministic and bounded") {
  Network a({4, 1, 1}, {LayerSpec::dense(4, 3), LayerSpec::readout(3, 2)}), b = a, c = a;
  init_weights(a, 0);
  init_weights(b, 0);
  init_weights(c, 1);
  CHECK(a.weights == b.weights);
  CHECK(a.weights != c.weights);
  for (double w : a.weights[0])
    CHECK(std::abs(w) <= std::sqrt(6.0 / 4.0));
}

TEST_CASE("spike_rate counts spikes") {
  TemporalTape tape;
  tape.steps = 2;
  tape.layers.resize(3);
  tape.layers[0].spikes = Matrix(2, 2, 0.0);
  tape.layers[1].spikes = Matrix(2, 2, 1.0);
  tape.layers[2].spikes = Matrix(2, 2, 0.0);
  tape.layers[2].spikes(0, 0) = tape.layers[2].spikes(1, 1) = 1.0;
  const auto r = spike_rate(tape);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 0.5);
}

TEST_CASE("checkpoint round trip and version check") {
  Network net = build_network({1, 6, 6}, 3, "conv(2,3,1,pool),dense(4)");
  init_weights(net, 3);
  for (auto &W : net.weights)
    for (double &w : W)
      w = static_cast<float>(w);
  NeuronConfig cfg;
  cfg.tau = 0.3;
  cfg.reset = ResetKind::soft;
  const Checkpoint ck{net, cfg, "T = 4\n"};
  const auto bytes = encode_checkpoint(ck);
  const auto back = decode_checkpoint(bytes);
  CHECK(back.net.weights == net.weights);
  CHECK(back.net.layers().size() == 3);
  CHECK(back.neuron.tau == 0.3);
  CHECK(back.neuron.reset == ResetKind::soft);
  CHECK(back.run_config == "T = 4\n");

  auto bad = bytes;
  bad[4] = 99;
  try {
    decode_checkpoint(bad);
    FAIL("version mismatch accepted");
  } catch (const FormatError &e) {
    CHECK(e.kind() == FormatError::Kind::bad_version);
  }
  bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad.resize(bytes.size() / 2);
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);

  const auto path = (std::filesystem::temp_directory_path() / "spikematch_ckpt_test.bin").string();
  save_checkpoint(path, ck);
  CHECK(load_checkpoint(path).net.weights == net.weights);
  std::filesystem::remove(path);
}

} // TEST_SUITE
