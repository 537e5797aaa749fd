#include <doctest.h>

#include "../support/oracles.hpp"

#include "spikematch/analysis.hpp"
#include "spikematch/error.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace spikematch;

namespace {

Matrix random_matrix(CounterRng &rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double &v : m.data)
    v = rng.uniform(-1, 1);
  return m;
}

// Singular values as square roots of the eigenvalues of A A^T.
double erank_via_gram(const Matrix &a) {
  Eigen::MatrixXd A(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      A(i, j) = a(i, j);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A * A.transpose()).eigenvalues();
  std::vector<double> sv;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-20)
      sv.push_back(std::sqrt(ev(i)));
  double s = 0, h = 0;
  for (double v : sv)
    s += v;
  for (double v : sv)
    h -= v / s * std::log(v / s);
  return std::exp(h);
}

} // namespace

TEST_SUITE("analysis") {

TEST_CASE("cosine diversity") {
  Matrix same(3, 4, 1.0);
  const auto a = cosine_diversity(same);
  CHECK(a.mean == doctest::Approx(1.0));
  for (double v : a.cosine.data)
    CHECK(v == doctest::Approx(1.0));

  Matrix eye(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    eye(i, i) = 2.0;
  const auto b = cosine_diversity(eye);
  CHECK(b.cosine(0, 1) == 0.0);
  CHECK(b.mean == 0.0);

  CounterRng rng(1);
  const auto c = cosine_diversity(random_matrix(rng, 4, 6));
  CHECK(c.pairs == 6);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(c.cosine(i, i) == 1.0);
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(c.cosine(i, j)) <= 1.0);
  }

  Matrix zero_row = random_matrix(rng, 4, 3);
  std::fill(zero_row.row(2).begin(), zero_row.row(2).end(), 0.0);
  const auto d = cosine_diversity(zero_row);
  CHECK(d.pairs == 3);
  CHECK(std::isnan(d.cosine(0, 2)));
  CHECK_THROWS_AS(cosine_diversity(Matrix(3, 0)), DimensionError);
}

TEST_CASE("pairwise KL") {
  Matrix same(3, 2, 0.5);
  for (double v : pairwise_kl(same).data)
    CHECK(v == 0.0);
  Matrix pq(2, 2);
  pq(0, 0) = 1.0;
  pq(1, 0) = pq(1, 1) = 0.5;
  const Matrix kl = pairwise_kl(pq);
  CHECK(std::abs(kl(0, 1) - std::log(2.0)) <= 1e-10);
  CHECK(kl(1, 0) != doctest::Approx(kl(0, 1)));

  CounterRng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix d(4, 5);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto p = oracle::random_distribution(rng, 5);
      std::copy(p.begin(), p.end(), d.row(i).begin());
    }
    const Matrix k = pairwise_kl(d);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(k(i, i) == 0.0);
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(k(i, j) >= 0.0);
    }
  }
  Matrix bad(1, 2, 0.7);
  CHECK_THROWS_AS(pairwise_kl(bad), NumericError);
}

TEST_CASE("temporal variance") {
  CHECK(temporal_variance(Matrix(3, 2, 0.4)) <= 1e-30);
  Matrix two(2, 1);
  two(1, 0) = 2.0;
  CHECK(temporal_variance(two) == doctest::Approx(2.0));
  CounterRng rng(3);
  Matrix m = random_matrix(rng, 5, 4);
  const double v = temporal_variance(m);
  for (double &x : m.data)
    x *= 3.0;
  CHECK(temporal_variance(m) == doctest::Approx(9.0 * v));
  CHECK_THROWS_AS(temporal_variance(Matrix(1, 3)), DimensionError);
}

TEST_CASE("effective rank") {
  Matrix r1(4, 6);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      r1(i, j) = double(i + 1) * double(j % 3 + 1);
  CHECK(effective_rank(r1) == doctest::Approx(1.0));
  Matrix eye(3, 5);
  for (std::size_t i = 0; i < 3; ++i)
    eye(i, i) = 2.5;
  CHECK(effective_rank(eye) == doctest::Approx(3.0));
  CounterRng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = random_matrix(rng, 4, 8);
    const double e = effective_rank(a);
    CHECK(std::abs(e - erank_via_gram(a)) <= 1e-8);
    CHECK(e >= 1.0);
    CHECK(e <= 4.0);
    for (double &x : a.data)
      x *= 7.5;
    CHECK(effective_rank(a) == doctest::Approx(e).epsilon(1e-12));
  }
  CHECK_THROWS_AS(effective_rank(Matrix(3, 3)), NumericError);
}

TEST_CASE("expected calibration error") {
  const std::vector<double> ones(5, 1.0);
  CHECK(ece(ones, std::vector<bool>(5, true)).ece == 0.0);

  const std::vector<double> c8(10, 0.8);
  std::vector<bool> six(10, false);
  std::fill(six.begin(), six.begin() + 6, true);
  const auto r = ece(c8, six);
  CHECK(r.ece == doctest::Approx(0.2));
  CHECK(r.bins[7].count == 10);  // 0.8 lies in (0.7, 0.8]

  // Ten at 0.8 with 6 right, plus ten at 0.3 with 5 right.
  std::vector<double> conf = c8;
  std::vector<bool> ok = six;
  for (int i = 0; i < 10; ++i) {
    conf.push_back(0.3);
    ok.push_back(i < 5);
  }
  CHECK(ece(conf, ok).ece == doctest::Approx(0.5 * 0.2 + 0.5 * 0.2));

  std::size_t total = 0;
  for (const auto &b : ece(conf, ok).bins)
    total += b.count;
  CHECK(total == conf.size());
  CHECK_THROWS_AS(ece(std::vector<double>{0.0}, {true}), NumericError);
  CHECK_THROWS_AS(ece(std::vector<double>{1.1}, {true}), NumericError);
}

TEST_CASE("property: constructed calibrated samples have small ECE") {
  CounterRng rng(5);
  std::vector<double> conf;
  std::vector<bool> ok;
  for (std::size_t b = 0; b < 10; ++b) {
    const double c = (b + 0.5) / 10.0;
    for (int k = 0; k < 20; ++k) {
      conf.push_back(c);
      ok.push_back(k < std::lround(20 * c));
    }
  }
  const double e = ece(conf, ok).ece;
  CHECK(e >= 0.0);
  CHECK(e <= 1.0 / 20.0);
}

TEST_CASE("utilization ratio") {
  CHECK(utilization_ratio(0, 12) == 0.0);
  CHECK(utilization_ratio(12, 12) == 1.0);
  CHECK(utilization_ratio(3, 12) == 0.25);
  CHECK_THROWS_AS(utilization_ratio(0, 0), ContractError);
}

TEST_CASE("membrane divergence") {
  const std::vector<double> zeros(5, 0.0);
  CHECK(membrane_divergence(0.7, zeros, 4, 2) == 0.0);
  const std::vector<double> pulse{1.0, 0.0, 0.0};
  CHECK(membrane_divergence(0.5, pulse, 3, 1) == doctest::Approx(0.75));
  CHECK(membrane_divergence_closed_form(0.5, 1.0, pulse, 3, 1) == doctest::Approx(0.75));
  const std::vector<double> constant{1.0, 1.0};
  CHECK(membrane_divergence(0.5, constant, 2, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(membrane_divergence(0.5, constant, 2, 2), ContractError);

  CounterRng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const double tau = rng.uniform(0.0, 0.99);
    const auto in = oracle::random_vector(rng, 10, -1, 2);
    const std::size_t tp = 1 + rng.below(8), t = tp + 1 + rng.below(10 - tp);
    double u = 0, u_tp = 0;
    for (std::size_t i = 1; i <= t; ++i) {
      u = tau * u + in[i - 1];
      if (i == tp)
        u_tp = u;
    }
    CHECK(std::abs(membrane_divergence(tau, in, t, tp) - std::abs(u - u_tp)) <= 1e-10);
  }
}

TEST_CASE("energy estimate") {
  const Network net({1, 4, 4}, {LayerSpec::conv2d(1, 2, 3, 1), LayerSpec::conv2d(2, 2, 3, 1),
                                LayerSpec::readout(32, 3)});
  const auto &L = net.layers();
  CHECK(layer_ops(L[1], 0.5) == 9 * 16 * 2 * 2 * 0.5);
  CHECK(layer_ops(L[0], 0.5) == 144.0);
  CHECK(energy_from_ops(std::vector<double>{100, 144}) == doctest::Approx(589.6));

  const std::vector<double> silent{1.0, 0.0, 0.0};
  const auto s = energy_estimate(L, silent);
  CHECK(s.total == doctest::Approx(layer_ops(L[0], 1.0) * 4.6));
  CHECK(s.layers[0].mac);
  CHECK_THROWS_AS(energy_estimate(L, std::vector<double>{1.0}), ContractError);

  CounterRng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z{1.0, rng.uniform(), rng.uniform()};
    const double e0 = energy_estimate(L, z).total;
    const std::size_t k = 1 + rng.below(2);
    z[k] = std::min(1.0, z[k] + rng.uniform(0, 0.3));
    CHECK(energy_estimate(L, z).total >= e0);
  }
}

TEST_CASE("layer activity uses the previous layer's spike rate") {
  Network net({2, 1, 1}, {LayerSpec::dense(2, 2), LayerSpec::readout(2, 2)});
  net.weights[0] = {1.0, 0.0, 0.0, 0.0};  // neuron 0 fires every step, neuron 1 never
  const std::vector<std::vector<double>> x{{1.0, 1.0}};
  const auto z = layer_activity(net, {}, 4, x);
  CHECK(z[0] == 1.0);
  CHECK(z[1] == doctest::Approx(0.5));
}

TEST_CASE("serialization") {
  DiversityReport r;
  r.cosine = Matrix(2, 2, 1.0);
  r.kl = Matrix(2, 2);
  r.mean_cosine = 1.0;
  r.effective_rank = 1.0;
  const auto j = nlohmann::json::parse(diversity_json(r));
  CHECK(j["effective_rank"] == 1.0);
  CHECK(matrix_csv(Matrix(2, 2, 0.5), "t").rfind("row,t0,t1\n", 0) == 0);
  EnergyReport e;
  e.layers.push_back({"dense", 1.0, 10, true, 46});
  e.total = 46;
  const std::string csv = energy_csv(e);
  CHECK(csv.find("total") != std::string::npos);
}

} // TEST_SUITE
