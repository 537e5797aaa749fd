#include <doctest.h>

#include "spikematch/error.hpp"
#include "spikematch/objectives.hpp"
#include "spikematch/rng.hpp"

#include <cmath>
#include <vector>

using namespace spikematch;
using V = std::vector<double>;

TEST_SUITE("objectives") {

TEST_CASE("softmax stability and closed form") {
  const auto p = softmax(V{std::log(1.0), std::log(2.0), std::log(3.0)});
  CHECK(p[0] == doctest::Approx(1.0 / 6));
  CHECK(p[1] == doctest::Approx(2.0 / 6));
  CHECK(p[2] == doctest::Approx(3.0 / 6));
  const auto q = softmax(V{1000, 0, 0});
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(q[1]));
  const auto u = softmax(V{0, 0, 0, 0});
  for (double x : u)
    CHECK(x == doctest::Approx(0.25));
}

TEST_CASE("cross_entropy examples") {
  CHECK(cross_entropy(one_hot(0, 3), V{1000, 0, 0}) == doctest::Approx(0.0));
  CHECK(cross_entropy(V{0.25, 0.25, 0.25, 0.25}, V{0, 0, 0, 0}) == doctest::Approx(std::log(4.0)));
  const V logits{0.3, -1.2, 2.0};
  const auto p = softmax(logits);
  CHECK(cross_entropy(p, logits) == doctest::Approx(entropy(p)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(V{0.5, 0.6}, V{0, 0}), Error);
  CHECK_THROWS_AS(cross_entropy(V{1.0}, V{0, 0}), DimensionError);
}

TEST_CASE("cross_entropy gradient matches finite differences") {
  CounterRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    V z(5), t(5);
    double s = 0;
    for (auto &x : z)
      x = rng.uniform(-3, 3);
    for (auto &x : t)
      s += (x = rng.uniform());
    for (auto &x : t)
      x /= s;
    V g(5, 0.0);
    cross_entropy_grad(t, z, 1.0, g);
    for (std::size_t i = 0; i < 5; ++i) {
      auto zp = z, zm = z;
      zp[i] += 1e-6;
      zm[i] -= 1e-6;
      CHECK(g[i] == doctest::Approx((cross_entropy(t, zp) - cross_entropy(t, zm)) / 2e-6).epsilon(1e-6));
    }
  }
}

TEST_CASE("property: Gibbs inequality and stability at large logits") {
  CounterRng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    V p(6), z(6);
    double s = 0;
    for (auto &x : p)
      s += (x = rng.uniform());
    for (auto &x : p)
      x /= s;
    for (auto &x : z)
      x = rng.uniform(-1e4, 1e4);
    const double h = cross_entropy(p, z);
    CHECK(std::isfinite(h));
    CHECK(h >= entropy(p) - 1e-8);
    CHECK(h >= 0.0);
  }
}

TEST_CASE("tet_loss examples") {
  CounterRng rng(9);
  auto random_trace = [&](std::size_t T, std::size_t C) {
    OutputTrace tr{Matrix(T, C)};
    for (double &v : tr.O.data)
      v = rng.uniform(-2, 2);
    return tr;
  };

  // T = 1 equals the mean cross-entropy over the batch, bit for bit.
  std::vector<OutputTrace> b1{random_trace(1, 4), random_trace(1, 4), random_trace(1, 4)};
  std::vector<std::size_t> y1{0, 3, 1};
  double mean_ce = 0;
  for (std::size_t b = 0; b < 3; ++b)
    mean_ce += cross_entropy(one_hot(y1[b], 4), b1[b].O.row(0));
  mean_ce /= 3;
  CHECK(tet_loss(b1, y1) == mean_ce);

  // Constant over time equals the single-step value.
  OutputTrace c{Matrix(4, 3)};
  for (std::size_t t = 0; t < 4; ++t) {
    c.O(t, 0) = 0.5;
    c.O(t, 1) = -0.2;
    c.O(t, 2) = 1.1;
  }
  std::vector<OutputTrace> bc{c};
  std::vector<std::size_t> yc{2};
  CHECK(tet_loss(bc, yc) == doctest::Approx(cross_entropy(one_hot(2, 3), c.O.row(0))).epsilon(1e-14));

  // Naive double loop.
  std::vector<OutputTrace> b2{random_trace(4, 5), random_trace(4, 5)};
  std::vector<std::size_t> y2{4, 0};
  double naive = 0;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 4; ++t) {
      double mx = -1e300, z = 0;
      for (double v : b2[b].O.row(t))
        mx = std::max(mx, v);
      for (double v : b2[b].O.row(t))
        z += std::exp(v - mx);
      naive += -(b2[b].O(t, y2[b]) - mx - std::log(z));
    }
  naive /= 8;
  CHECK(std::abs(tet_loss(b2, y2) - naive) <= 1e-10);
  CHECK_THROWS(tet_loss(b2, std::vector<std::size_t>{1}));
}

TEST_CASE("tet_loss_grad matches finite differences of tet_loss") {
  CounterRng rng(13);
  OutputTrace tr{Matrix(3, 4)};
  for (double &v : tr.O.data)
    v = rng.uniform(-1, 1);
  const std::size_t label = 2, batch = 5;
  const Matrix g = tet_loss_grad(tr, label, batch);
  for (std::size_t k = 0; k < tr.O.data.size(); ++k) {
    auto plus = tr, minus = tr;
    plus.O.data[k] += 1e-6;
    minus.O.data[k] -= 1e-6;
    std::vector<OutputTrace> bp{plus}, bm{minus};
    std::vector<std::size_t> y{label};
    // tet_loss averages over a batch of one; rescale to the batch of five.
    const double fd = (tet_loss(bp, y) - tet_loss(bm, y)) / 2e-6 / double(batch);
    CHECK(g.data[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("total_loss examples") {
  CHECK(total_loss(1.0, 2.0, 1.0) == 3.0);
  CHECK(total_loss(1.0, 123.0, 0.0) == 1.0);
  CHECK(total_loss(0.5, 0.25, 2.0) == 1.0);
  CHECK_THROWS(total_loss(1.0, 1.0, -1.0));
}

} // TEST_SUITE
