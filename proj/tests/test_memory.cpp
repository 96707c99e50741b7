#include "doctest.h"

#include "ham/energy.hpp"
#include "ham/memory.hpp"
#include "support.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ham;

namespace {

// Reference selection: a partial Fisher-Yates shuffle driven by raw engine
// outputs, written independently of Rng::choose.
std::vector<std::size_t> reference_choice(std::uint64_t seed, std::size_t n, std::size_t count) {
  std::mt19937_64 eng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + eng() % (n - i)]);
  idx.resize(count);
  return idx;
}

std::vector<Tensor> hadamard_rows(std::size_t n, std::size_t k) {
  std::vector<Tensor> rows(k, Tensor(n));
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < n; ++c) rows[r][c] = (__builtin_popcountll(r & c) % 2) ? -1.0 : 1.0;
  return rows;
}

PatternSet set_of(std::vector<Tensor> p) {
  PatternSet s;
  s.patterns = std::move(p);
  return s;
}

}  // namespace

TEST_CASE("random binary patterns") {
  const PatternSet a = random_binary_patterns(5, 40, 3);
  CHECK(a.size() == 5);
  for (const auto& p : a.patterns)
    for (double v : p) CHECK((v == 1.0 || v == -1.0));
  CHECK(random_binary_patterns(5, 40, 3).patterns == a.patterns);
  CHECK(random_binary_patterns(5, 40, 4).patterns != a.patterns);

  // entries are the sign of the engine's top bit, drawn row-major
  std::mt19937_64 eng(3);
  for (const auto& p : a.patterns)
    for (double v : p) CHECK(v == ((eng() >> 63) ? -1.0 : 1.0));
}

TEST_CASE("corrupt examples") {
  const Tensor p = random_binary_patterns(1, 64, 8).patterns[0];
  CHECK(corrupt(p, NoiseModel::bit_flip(0.0, 1)) == p);
  CHECK(corrupt(p, NoiseModel::none()) == p);
  CHECK(corrupt(p, NoiseModel::mask(1.0, 1)) == Tensor(64, 0.0));

  const Tensor flipped = corrupt(p, NoiseModel::bit_flip(0.125, 42));
  const auto chosen = reference_choice(42, 64, 8);
  Tensor expected = p;
  for (std::size_t i : chosen) expected[i] = -expected[i];
  CHECK(flipped == expected);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < 64; ++i) flips += flipped[i] != p[i];
  CHECK(flips == 8);

  CHECK(corrupt(p, NoiseModel::bit_flip(0.125, 42)) == flipped);
  CHECK_THROWS_AS(corrupt(Tensor{1.0, 0.5}, NoiseModel::bit_flip(0.5, 1)), DomainError);
  CHECK_THROWS_AS(corrupt(p, NoiseModel::bit_flip(1.5, 1)), DomainError);
  CHECK_THROWS_AS(corrupt(p, NoiseModel::gaussian(-1.0, 1)), DomainError);

  const Tensor g = corrupt(p, NoiseModel::gaussian(0.3, 5));
  std::mt19937_64 eng(5);
  for (std::size_t i = 0; i < 4; ++i) {
    const double u1 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    const double z = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2);
    CHECK(g[i] == doctest::Approx(p[i] + 0.3 * z).epsilon(1e-15));
  }
}

TEST_CASE("store_single_hidden builds the one-hidden-layer network") {
  const PatternSet set = set_of(hadamard_rows(8, 3));
  const StoredNetwork net = store_single_hidden(set, 5.0);
  CHECK(validate(net.spec).empty());
  CHECK(net.spec.layers[0].shape == Shape::flat(8));
  CHECK(net.spec.layers[1].shape == Shape::flat(3));
  CHECK(net.spec.layers[1].lagrangian == Lagrangian::log_sum_exp(5.0));
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 8; ++i) CHECK(net.spec.connections[0].weights[k * 8 + i] == set.patterns[k][i]);
  CHECK(net.warnings.empty());

  const StoredNetwork dup = store_single_hidden(set_of({set.patterns[0], set.patterns[1], set.patterns[0]}), 1.0);
  REQUIRE(dup.warnings.size() == 1);
  CHECK(dup.warnings[0].find("identical") != std::string::npos);
  CHECK_THROWS_AS(store_single_hidden(PatternSet{}, 1.0), DomainError);
}

TEST_CASE("a single stored pattern is reached from any cue") {
  const Tensor p = random_binary_patterns(1, 16, 2).patterns[0];
  const StoredNetwork net = store_single_hidden(set_of({p}), 1.0);
  Rng rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor cue = testing::random_tensor(rng, 16, 3.0);
    const Retrieval r = retrieve(net.spec, cue, {}, std::span<const double>(p));
    CHECK(r.report.converged);
    CHECK(r.report.bit_error == 0);
    for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(r.retrieved[i] - p[i]) < 1e-7);
  }
}

TEST_CASE("orthogonal patterns are retrieved exactly at large beta") {
  const auto rows = hadamard_rows(16, 2);
  const StoredNetwork net = store_single_hidden(set_of(rows), 4.0);
  const Retrieval r = retrieve(net.spec, rows[0], {});
  CHECK(r.report.converged);
  CHECK(r.report.bit_error == 0);
  CHECK(r.report.overlap >= 1.0 - 1e-6);
  CHECK(r.report.success());
}

TEST_CASE("vanishing beta pulls the fixed point to the pattern mean") {
  const PatternSet set = random_binary_patterns(3, 12, 5);
  const StoredNetwork net = store_single_hidden(set, 1e-7);
  Tensor mean(12, 0.0);
  for (const auto& p : set.patterns) axpy(1.0 / 3.0, p, mean);
  const Retrieval r = retrieve(net.spec, set.patterns[1], {});
  CHECK(r.report.converged);
  for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(r.retrieved[i] - mean[i]) < 1e-5);
}

TEST_CASE("retrieve examples") {
  const StoredNetwork net = store_single_hidden(random_binary_patterns(4, 64, 9), 1.0);
  const Tensor& p = net.spec.connections[0].weights;
  const Tensor stored(p.begin() + 64, p.begin() + 128);

  const Retrieval same = retrieve(net.spec, stored, {});
  CHECK(same.report.overlap >= 1.0 - 1e-6);

  NetworkSpec zero = net.spec;
  std::fill(zero.connections[0].weights.begin(), zero.connections[0].weights.end(), 0.0);
  const Retrieval decayed = retrieve(zero, stored, {});
  CHECK(max_abs(decayed.retrieved) < 1e-8);

  const Tensor cue = corrupt(stored, NoiseModel::bit_flip(8.0 / 64.0, 17));
  const Retrieval noisy = retrieve(net.spec, cue, {}, std::span<const double>(stored));
  CHECK(noisy.report.bit_error == 0);
  CHECK(noisy.report.energy_final <= noisy.report.energy_initial + 1e-10);

  IntegratorConfig short_run;
  short_run.max_steps = 3;
  const Retrieval partial = retrieve(net.spec, cue, short_run, std::span<const double>(stored));
  CHECK_FALSE(partial.report.converged);
  CHECK(partial.report.steps == 3);

  CHECK_THROWS_AS(retrieve(net.spec, Tensor(5), {}), ShapeError);
}

TEST_CASE("recall report csv") {
  RecallReport r;
  r.overlap = 0.5;
  r.bit_error = 3;
  r.converged = true;
  r.steps = 12;
  r.energy_initial = -1.25;
  r.energy_final = -2.0;
  CHECK(std::string(RecallReport::csv_header()) == "overlap,bit_error,converged,steps,energy_initial,energy_final");
  CHECK(r.csv_row() == "0.5,3,1,12,-1.25,-2");
}

TEST_CASE("every recall report respects the energy bound") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const PatternSet set = random_binary_patterns(2 + rng.below(10), 24, rng.next());
    const StoredNetwork net = store_single_hidden(set, 0.05 + rng.uniform(), {1.0, trial % 2 ? 0.0 : 0.2});
    const Tensor cue = corrupt(set.patterns[0], NoiseModel::bit_flip(0.2, rng.next()));
    const Retrieval r = retrieve(net.spec, cue, {}, std::span<const double>(set.patterns[0]));
    CHECK(r.report.energy_final <= r.report.energy_initial + 1e-10);
  }
}

TEST_CASE("capacity sweep") {
  CapacityConfig cfg;
  cfg.input_size = 32;
  cfg.k_list = {1, 8, 48};
  cfg.beta_list = {1e-4, 0.03, 0.3, 1.0};
  cfg.trials = 20;
  cfg.seed = 5;
  const auto rows = capacity_sweep(cfg);
  REQUIRE(rows.size() == 12);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rows[i].success_rate == 1.0);

  const double slack = 2.0 / std::sqrt(20.0);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t b = 1; b < 4; ++b) CHECK(rows[k * 4 + b].success_rate >= rows[k * 4 + b - 1].success_rate - slack);
  CHECK(rows[4].success_rate <= 0.05);
  CHECK(rows[8].success_rate <= 0.05);
  CHECK(rows[11].success_rate > 0.95);

  std::ostringstream a, b;
  write_capacity_csv(a, rows);
  write_capacity_csv(b, capacity_sweep(cfg));
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, a.str().find('\n')) == "K,beta,trials,success_rate,mean_steps");

  cfg.trials = 0;
  CHECK_THROWS_AS(capacity_sweep(cfg), DomainError);
}

TEST_CASE("assembly demo") {
  const AssemblyDemo demo = build_assembly_demo();
  CHECK(validate(demo.spec).empty());
  REQUIRE(demo.memories.size() == 2);

  // both rules route through feature channel 1, i.e. the same kernel patch
  const auto& rules = demo.spec.connections[1];
  const std::size_t npatch = demo.options.patches.size();
  for (std::size_t r = 0; r < 2; ++r) {
    bool uses = false;
    for (std::size_t s = 0; s < rules.cols / npatch; ++s) uses |= rules.weights[r * rules.cols + s * npatch + 1] != 0.0;
    CHECK(uses);
  }
  const auto& kernel = demo.spec.connections[0].weights;
  for (std::size_t i = 0; i < 4; ++i) CHECK(kernel[i * npatch + 1] == demo.options.patches[1][i]);

  for (std::size_t m = 0; m < 2; ++m) {
    const Tensor& target = demo.memories.patterns[m];
    Tensor top_half = target;
    std::fill(top_half.begin() + 8, top_half.end(), 0.0);
    const Retrieval r = retrieve(demo.spec, top_half, {}, std::span<const double>(target));
    CHECK(r.report.converged);
    CHECK(r.report.overlap > 0.99);
    CHECK(r.report.energy_final <= r.report.energy_initial + 1e-10);
  }
}

TEST_CASE("assembly demo with one patch and one layout") {
  AssemblyOptions o;
  o.patches = {{1.0, -1.0, 1.0, 1.0}};
  o.layouts = {{0, 0, 0, 0}};
  const AssemblyDemo demo = build_assembly_demo(o);
  CHECK(validate(demo.spec).empty());
  Rng rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor cue = testing::random_tensor(rng, 16);
    const Retrieval r = retrieve(demo.spec, cue, {}, std::span<const double>(demo.memories.patterns[0]));
    CHECK(r.report.overlap > 0.99);
  }
  o.layouts = {{0, 0, 3, 0}};
  CHECK_THROWS_AS(build_assembly_demo(o), DomainError);
}
