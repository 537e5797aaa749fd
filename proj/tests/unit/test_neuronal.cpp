#include <doctest.h>

#include "spikematch/error.hpp"
#include "spikematch/neuronal.hpp"
#include "spikematch/rng.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace spikematch;
using V = std::vector<double>;

namespace {

NeuronConfig with_tau(double tau) {
  NeuronConfig c;
  c.tau = tau;
  return c;
}

} // namespace

TEST_SUITE("neuronal") {

TEST_CASE("membrane_update examples") {
  CHECK(membrane_update(V{0.4}, V{0.8}, with_tau(0.5)) == V{1.0});
  CHECK(membrane_update(V{0.0}, V{0.0}, with_tau(0.9)) == V{0.0});
  CHECK(membrane_update(V{5.0}, V{0.3}, with_tau(0.0)) == V{0.3});
  CHECK_THROWS_AS(membrane_update(V{1, 2}, V{1}, with_tau(0.5)), DimensionError);
}

TEST_CASE("fire is inclusive at the threshold") {
  NeuronConfig c;
  CHECK(fire(V{1.0}, c) == V{1.0});
  CHECK(fire(V{0.999}, c) == V{0.0});
  CHECK(fire(V{-2.0, 3.5}, c) == V{0.0, 1.0});
  CHECK_THROWS_AS(fire(V{std::nan("")}, c), NumericError);
  CHECK_THROWS_AS(fire(V{std::numeric_limits<double>::infinity()}, c), NumericError);
}

TEST_CASE("reset examples") {
  NeuronConfig hard, soft;
  soft.reset = ResetKind::soft;
  CHECK(reset(V{1.7}, V{1}, hard) == V{0.0});
  CHECK(reset(V{1.7}, V{1}, soft)[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(reset(V{0.3}, V{0}, hard) == V{0.3});
  CHECK_THROWS_AS(reset(V{1.0}, V{0.5}, hard), ContractError);
  CHECK_THROWS_AS(reset(V{1.0, 2.0}, V{1.0}, hard), DimensionError);
}

TEST_CASE("surrogate examples and support") {
  NeuronConfig c;
  CHECK(surrogate_gradient(V{1.0}, c) == V{1.0});
  CHECK(surrogate_gradient(V{2.5}, c) == V{0.0});
  CHECK(surrogate_gradient(V{1.5}, c) == V{0.5});

  c.gamma = 0.5;
  CHECK(surrogate_gradient(V{1.0}, c)[0] == doctest::Approx(2.0));  // peak 1/gamma
  CHECK(surrogate_gradient(V{0.5}, c)[0] == 0.0);
  CHECK(surrogate_gradient(V{1.5}, c)[0] == 0.0);

  NeuronConfig r;
  r.surrogate = SurrogateKind::rectangular;
  r.width = 0.5;
  CHECK(surrogate_gradient(V{1.0, 1.5, 0.5, 1.51}, r) == V{1.0, 1.0, 1.0, 0.0});
}

TEST_CASE("lif_step examples") {
  NeuronConfig c;
  auto s = lif_step(V{0.4}, V{0.8}, c);
  CHECK(s.u_post == V{0.0});
  CHECK(s.spikes == V{1.0});
  CHECK(s.u_pre == V{1.0});
  s = lif_step(V{0.2}, V{0.1}, c);
  CHECK(s.u_post[0] == doctest::Approx(0.2));
  CHECK(s.spikes == V{0.0});
  s = lif_step(V{0.0, 0.0}, V{0.0, 0.0}, c);
  CHECK(s.u_post == V{0.0, 0.0});
  CHECK(s.spikes == V{0.0, 0.0});
}

TEST_CASE("config validation") {
  NeuronConfig c;
  CHECK_NOTHROW(c.validate());
  c.tau = 0.0;
  CHECK_NOTHROW(c.validate());
  c.tau = 1.0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.v_th = 0.0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = {};
  c.gamma = -1.0;
  CHECK_THROWS_AS(c.validate(), ContractError);
}

TEST_CASE("property: hard reset zeroes exactly the spiking entries") {
  CounterRng rng(7);
  NeuronConfig c;
  for (int trial = 0; trial < 200; ++trial) {
    V u(16), in(16);
    for (auto &x : u)
      x = rng.uniform(-1, 1);
    for (auto &x : in)
      x = rng.uniform(-1, 2);
    const auto s = lif_step(u, in, c);
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(s.spikes[i] == (s.u_pre[i] >= c.v_th ? 1.0 : 0.0));
      CHECK(s.u_post[i] == (s.spikes[i] == 1.0 ? 0.0 : s.u_pre[i]));
    }
  }
}

TEST_CASE("property: leak-only recursion matches the expanded sum") {
  CounterRng rng(11);
  NeuronConfig c;
  c.v_th = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 200; ++trial) {
    c.tau = rng.uniform(0.0, 0.99);
    const std::size_t T = 2 + rng.below(10), tp = 1 + rng.below(T - 1);
    V in(T + 1);
    for (auto &x : in)
      x = rng.uniform(-1, 1);
    V u{0.0}, u_tp;
    for (std::size_t t = 1; t <= T; ++t) {
      u = lif_step(u, V{in[t]}, c).u_post;
      if (t == tp)
        u_tp = u;
    }
    double expect = std::pow(c.tau, double(T - tp)) * u_tp[0];
    for (std::size_t i = tp + 1; i <= T; ++i)
      expect += std::pow(c.tau, double(T - i)) * in[i];
    CHECK(std::abs(u[0] - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
  }
}

} // TEST_SUITE
