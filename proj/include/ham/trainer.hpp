#pragma once

#include "ham/memory.hpp"
#include "ham/tensor.hpp"
#include "ham/topology.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ham {

struct TrainConfig {
  enum class GradientMode { Analytic, FiniteDifference };

  /// Euler steps in the unrolled relaxation.
  std::size_t unroll_steps = 50;
  double dt = 0.1;
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  /// Patterns per gradient step; zero means the whole corpus.
  std::size_t batch_size = 0;
  /// Corruption applied to each clean pattern; pattern i of a batch uses
  /// seed mix_seed(noise.seed, i).
  NoiseModel noise;
  GradientMode gradient_mode = GradientMode::Analytic;
  /// Central-difference step of the finite-difference oracle.
  double fd_step = 1e-5;
  /// Halve the learning rate (persistently) while a step raises the batch loss.
  bool backtracking = false;
  /// Reuse the same corruption every epoch instead of reseeding per epoch.
  bool freeze_noise = false;
  double divergence_limit = 1e6;
};

/// Mean over the batch of |x_T - clean|^2 / n, where x_T is the input layer
/// after T Euler steps from (corrupted clean, zeros).
double unroll_loss(const NetworkSpec& spec, std::span<const Tensor> clean, const TrainConfig& cfg);

struct Gradient {
  double loss = 0.0;
  /// One tensor per connection, shaped like its weights.
  std::vector<Tensor> weights;
  std::vector<std::string> warnings;
};

/// dLoss/dW for every connection, by reverse-mode differentiation through
/// the unroll or by central differences, per cfg.gradient_mode.
Gradient gradient(const NetworkSpec& spec, std::span<const Tensor> clean, const TrainConfig& cfg);

struct TrainResult {
  NetworkSpec spec;
  /// Mean batch loss per epoch, measured before each update.
  std::vector<double> loss_curve;
  bool diverged = false;
  double final_learning_rate = 0.0;
  std::vector<std::string> warnings;
};

TrainResult train(const NetworkSpec& spec, const PatternSet& corpus, const TrainConfig& cfg);

/// Header `epoch,loss`.
void write_loss_csv(std::ostream& os, std::span<const double> curve);

}  // namespace ham
