#pragma once

#include "ham/dynamics.hpp"
#include "ham/tensor.hpp"
#include "ham/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ham {

struct PatternSet {
  std::vector<Tensor> patterns;
  std::vector<std::string> labels;

  std::size_t size() const { return patterns.size(); }
  /// Throws DomainError when empty or when pattern lengths differ.
  void check() const;
};

/// K uniform +-1 patterns of length n; entry j of pattern k is Rng(seed).sign()
/// drawn in row-major order.
PatternSet random_binary_patterns(std::size_t k, std::size_t n, std::uint64_t seed);

struct NoiseModel {
  enum class Kind { None, BitFlip, GaussianAdditive, Mask };

  Kind kind = Kind::None;
  /// BitFlip rate, Gaussian sigma, or Mask fraction.
  double level = 0.0;
  std::uint64_t seed = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel bit_flip(double rate, std::uint64_t seed) { return {Kind::BitFlip, rate, seed}; }
  static NoiseModel gaussian(double sigma, std::uint64_t seed) {
    return {Kind::GaussianAdditive, sigma, seed};
  }
  static NoiseModel mask(double fraction, std::uint64_t seed) { return {Kind::Mask, fraction, seed}; }

  NoiseModel with_seed(std::uint64_t s) const { return {kind, level, s}; }
  void check() const;
};

/// Deterministic given the model's seed. BitFlip negates and Mask zeroes
/// exactly round(level * n) entries, chosen as Rng(seed).choose(n, count).
/// GaussianAdditive adds sigma * Rng(seed).gaussian() to each entry in order.
Tensor corrupt(std::span<const double> pattern, const NoiseModel& model);

struct StoreOptions {
  double tau_input = 1.0;
  /// Zero makes the hidden layer the adiabatic top layer.
  double tau_hidden = 0.1;
};

struct StoredNetwork {
  NetworkSpec spec;
  /// Non-fatal findings, e.g. duplicated patterns sharing an attractor.
  std::vector<std::string> warnings;
};

/// One-hidden-layer network: Quadratic input of pattern size, LogSumExp(beta)
/// hidden layer with one unit per pattern, dense weights whose row k is
/// pattern k.
StoredNetwork store_single_hidden(const PatternSet& patterns, double beta, const StoreOptions& opts = {});

struct RecallReport {
  /// Cosine similarity between the retrieved input layer and the reference.
  double overlap = 0.0;
  /// Sign mismatches against a +-1 reference; zero for real-valued references.
  std::size_t bit_error = 0;
  bool binary_reference = false;
  bool converged = false;
  std::size_t steps = 0;
  double energy_initial = 0.0;
  double energy_final = 0.0;

  /// Exact sign match for +-1 references, overlap >= 0.99 otherwise.
  bool success() const;

  static const char* csv_header();
  std::string csv_row() const;
};

struct Retrieval {
  Tensor retrieved;
  RecallReport report;
  NetworkState final_state;
};

/// Relaxes from the cue (input layer) with hidden layers at zero. The
/// reference defaults to the cue itself. Non-convergence is reported, not
/// thrown.
Retrieval retrieve(const NetworkSpec& spec, std::span<const double> cue, const IntegratorConfig& cfg,
                   std::optional<std::span<const double>> reference = std::nullopt);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct CapacityConfig {
  std::size_t input_size = 64;
  std::vector<std::size_t> k_list = {1};
  std::vector<double> beta_list = {1.0};
  NoiseModel noise = NoiseModel::bit_flip(0.1, 0);
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  StoreOptions store{1.0, 0.0};
  IntegratorConfig integrator;
};

struct CapacityRow {
  std::size_t k = 0;
  double beta = 0.0;
  std::size_t trials = 0;
  double success_rate = 0.0;
  double mean_steps = 0.0;
};

/// For every (K, beta): each trial stores K random +-1 patterns, corrupts one
/// of them and retrieves it. Trial t of a given K uses the same patterns,
/// probe index and corruption for every beta. Rows are ordered by K, then beta.
std::vector<CapacityRow> capacity_sweep(const CapacityConfig& cfg);

/// Header `K,beta,trials,success_rate,mean_steps`.
void write_capacity_csv(std::ostream& os, const std::vector<CapacityRow>& rows);

struct AssemblyOptions {
  /// Patch size w (also the stride) and composite image side L.
  std::size_t patch_size = 2;
  std::size_t image_size = 4;
  /// Primitive patches, each patch_size^2 values.
  std::vector<Tensor> patches;
  /// One patch index per feature-map site for every memory.
  std::vector<std::vector<std::size_t>> layouts;
  double beta_features = 2.0;
  double beta_rules = 2.0;
  double rule_gain = 1.0;
  double tau_input = 1.0;
  double tau_features = 0.2;

  /// Two orthogonal 2x2 patches tiled into two 4x4 layouts that both use
  /// patch 1.
  static AssemblyOptions two_layouts();
};

struct AssemblyDemo {
  NetworkSpec spec;
  /// Composite images encoded by the weights, one per layout.
  PatternSet memories;
  AssemblyOptions options;
};

/// Three-layer convolutional network assembled by hand: the kernel holds the
/// patch dictionary, each dense rule row selects one patch per site, and the
/// top layer (tau = 0) picks among rules.
AssemblyDemo build_assembly_demo(const AssemblyOptions& opts = AssemblyOptions::two_layouts());

}  // namespace ham
