#include "doctest.h"

#include "examples.hpp"
#include "ham/memory.hpp"
#include "ham/topology.hpp"
#include "ham/trainer.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace ham;

namespace {

std::vector<Tensor> hadamard_rows(std::size_t n, std::size_t k) {
  std::vector<Tensor> rows(k, Tensor(n));
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < n; ++c) rows[r][c] = (__builtin_popcountll(r & c) % 2) ? -1.0 : 1.0;
  return rows;
}

std::size_t weight_total(const NetworkSpec& s) {
  std::size_t n = 0;
  for (const auto& c : s.connections) n += c.weights.size();
  return n;
}

// Largest elementwise disagreement, each entry measured against the larger of
// its own magnitude and a floor of 1e-3 of the largest gradient entry.
double worst_relative(const std::vector<Tensor>& a, const std::vector<Tensor>& f) {
  double scale = 0.0;
  for (const auto& t : f) scale = std::max(scale, max_abs(t));
  double worst = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c)
    for (std::size_t i = 0; i < a[c].size(); ++i) {
      const double den = std::max({std::abs(a[c][i]), std::abs(f[c][i]), 1e-3 * scale});
      if (den > 0.0) worst = std::max(worst, std::abs(a[c][i] - f[c][i]) / den);
    }
  return worst;
}

}  // namespace

TEST_CASE("unroll loss of a zero-weight network is pure decay of the cue") {
  NetworkSpec s = examples::one_hidden(16, 4, 2.0, 0.5);
  std::fill(s.connections[0].weights.begin(), s.connections[0].weights.end(), 0.0);
  const auto clean = hadamard_rows(16, 3);
  TrainConfig cfg;
  cfg.unroll_steps = 7;
  cfg.dt = 0.2;
  cfg.noise = NoiseModel::bit_flip(0.25, 4);
  const double decay = std::pow(1.0 - cfg.dt / s.layers[0].tau, 7.0);
  double expected = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Tensor cue = corrupt(clean[i], cfg.noise.with_seed(mix_seed(cfg.noise.seed, i)));
    double acc = 0.0;
    for (std::size_t j = 0; j < 16; ++j) acc += std::pow(clean[i][j] - decay * cue[j], 2.0);
    expected += acc / 16.0 / 3.0;
  }
  CHECK(unroll_loss(s, clean, cfg) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("unroll loss vanishes on stored patterns and so does its gradient") {
  const auto rows = hadamard_rows(16, 4);
  PatternSet set;
  set.patterns = rows;
  const NetworkSpec s = store_single_hidden(set, 4.0, {1.0, 0.2}).spec;
  TrainConfig cfg;
  cfg.unroll_steps = 200;
  const double loss = unroll_loss(s, rows, cfg);
  CHECK(loss >= 0.0);
  CHECK(loss < 1e-6);
  const Gradient g = gradient(s, rows, cfg);
  CHECK(max_abs(g.weights[0]) < 1e-8);
}

TEST_CASE("unroll loss is never negative") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const NetworkSpec s = testing::random_network(rng);
    std::vector<Tensor> batch{testing::random_tensor(rng, s.layers[0].shape.size())};
    TrainConfig cfg;
    cfg.unroll_steps = 5;
    cfg.noise = NoiseModel::gaussian(0.3, rng.next());
    CHECK(unroll_loss(s, batch, cfg) >= 0.0);
  }
}

TEST_CASE("analytic gradient agrees with finite differences on every connection kind") {
  Rng rng(2718);
  int seen[3] = {0, 0, 0};
  int nets = 0;
  while (nets < 8 || seen[0] == 0 || seen[1] == 0 || seen[2] == 0) {
    const NetworkSpec s = testing::random_network(rng);
    if (weight_total(s) > 200) continue;
    ++nets;
    for (const auto& c : s.connections) ++seen[static_cast<int>(c.kind)];
    std::vector<Tensor> batch;
    for (int i = 0; i < 2; ++i) batch.push_back(testing::random_tensor(rng, s.layers[0].shape.size()));
    TrainConfig cfg;
    cfg.unroll_steps = 8;
    cfg.dt = 0.1;
    cfg.noise = NoiseModel::gaussian(0.2, rng.next());
    const Gradient a = gradient(s, batch, cfg);
    cfg.gradient_mode = TrainConfig::GradientMode::FiniteDifference;
    const Gradient f = gradient(s, batch, cfg);
    CHECK(a.loss == doctest::Approx(f.loss).epsilon(1e-14));
    CHECK_MESSAGE(worst_relative(a.weights, f.weights) < 1e-5, "net ", nets);
  }
}

TEST_CASE("duplicating the batch leaves the gradient unchanged") {
  const NetworkSpec s = examples::conv_hidden(0.3);
  Rng rng(1);
  const std::vector<Tensor> one{testing::random_tensor(rng, 36), testing::random_tensor(rng, 36)};
  const std::vector<Tensor> two{one[0], one[1], one[0], one[1]};
  TrainConfig cfg;
  cfg.unroll_steps = 10;
  const Gradient a = gradient(s, one, cfg);
  const Gradient b = gradient(s, two, cfg);
  CHECK(b.loss == doctest::Approx(a.loss).epsilon(1e-14));
  for (std::size_t c = 0; c < a.weights.size(); ++c)
    for (std::size_t i = 0; i < a.weights[c].size(); ++i)
      CHECK(std::abs(a.weights[c][i] - b.weights[c][i]) <= 1e-14 * (1.0 + std::abs(a.weights[c][i])));
}

TEST_CASE("training refuses adiabatic layers and warns about costly finite differences") {
  std::vector<Tensor> batch{Tensor(6, 1.0)};
  CHECK_THROWS_AS(unroll_loss(examples::two_dense_hidden(0.0), batch, {}), DomainError);

  NetworkSpec big;
  big.layers = {{"input", Shape::flat(101), Lagrangian::quadratic(), 1.0},
                {"hidden", Shape::flat(100), Lagrangian::log_sum_exp(1.0), 1.0}};
  big.connections = {Connection::dense(0, 100, 101, Tensor(10100, 0.0))};
  TrainConfig cfg;
  cfg.unroll_steps = 1;
  cfg.gradient_mode = TrainConfig::GradientMode::FiniteDifference;
  const std::vector<Tensor> ones{Tensor(101, 1.0)};
  const Gradient g = gradient(big, ones, cfg);
  REQUIRE(g.warnings.size() == 1);
  CHECK(g.warnings[0].find("10100") != std::string::npos);
}

TEST_CASE("zero learning rate leaves the weights and the loss unchanged") {
  const NetworkSpec s = examples::one_hidden(16, 8);
  PatternSet corpus;
  corpus.patterns = hadamard_rows(16, 4);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  cfg.unroll_steps = 10;
  cfg.noise = NoiseModel::bit_flip(0.125, 3);
  cfg.freeze_noise = true;
  const TrainResult r = train(s, corpus, cfg);
  CHECK(r.spec == s);
  REQUIRE(r.loss_curve.size() == 5);
  for (double l : r.loss_curve) CHECK(l == r.loss_curve[0]);
}

TEST_CASE("backtracking gives a non-increasing loss on a fixed batch") {
  const NetworkSpec s = examples::one_hidden(16, 8, 2.0, 0.2, 5);
  PatternSet corpus;
  corpus.patterns = hadamard_rows(16, 4);
  TrainConfig cfg;
  cfg.learning_rate = 2000.0;
  cfg.epochs = 30;
  cfg.unroll_steps = 20;
  cfg.noise = NoiseModel::bit_flip(0.125, 3);
  cfg.freeze_noise = true;
  cfg.backtracking = true;
  const TrainResult r = train(s, corpus, cfg);
  CHECK_FALSE(r.diverged);
  CHECK(r.final_learning_rate < cfg.learning_rate);
  for (std::size_t e = 1; e < r.loss_curve.size(); ++e) CHECK(r.loss_curve[e] <= r.loss_curve[e - 1]);
  CHECK(r.loss_curve.back() < r.loss_curve.front());
}

TEST_CASE("diverging training stops and keeps its history") {
  const NetworkSpec s = examples::one_hidden(16, 8);
  PatternSet corpus;
  corpus.patterns = hadamard_rows(16, 4);
  TrainConfig cfg;
  cfg.learning_rate = 1e9;
  cfg.epochs = 50;
  cfg.unroll_steps = 10;
  const TrainResult r = train(s, corpus, cfg);
  CHECK(r.diverged);
  CHECK(r.loss_curve.size() < 50);
  CHECK(r.loss_curve.size() >= 2);
}

TEST_CASE("training preserves the adjoint identity") {
  const NetworkSpec s = examples::conv_hidden(0.3);
  Rng rng(4);
  PatternSet corpus;
  for (int i = 0; i < 3; ++i) corpus.patterns.push_back(testing::random_tensor(rng, 36));
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.unroll_steps = 10;
  const TrainResult r = train(s, corpus, cfg);
  CHECK(r.spec.connections[0].weights != s.connections[0].weights);
  for (std::size_t c = 0; c < r.spec.connections.size(); ++c) {
    const Tensor u = testing::random_tensor(rng, r.spec.layers[c].shape.size());
    const Tensor v = testing::random_tensor(rng, r.spec.layers[c + 1].shape.size());
    const double lhs = dot(r.spec.forward(c, u), v);
    CHECK(std::abs(lhs - dot(u, r.spec.backward(c, v))) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("loss curve csv") {
  std::ostringstream os;
  const std::vector<double> curve{0.5, 0.25};
  write_loss_csv(os, curve);
  CHECK(os.str() == "epoch,loss\n0,0.5\n1,0.25\n");
}
