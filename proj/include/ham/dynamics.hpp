#pragma once

#include "ham/energy.hpp"
#include "ham/state.hpp"
#include "ham/topology.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace ham {

struct IntegratorConfig {
  enum class Method { Euler, RK4 };

  Method method = Method::Euler;
  /// Step size; zero selects 0.1 * min positive tau.
  double dt = 0.0;
  /// Halve dt (down to dt / 2^10) while a step raises the energy.
  bool adaptive = false;
  /// Converged when max |dx/dt| falls below this.
  double convergence_eps = 1e-8;
  std::size_t max_steps = 100000;
  /// Hold the input layer fixed. Off by default: all layers evolve.
  bool clamp_input = false;
};

/// dt actually used for `cfg` on `spec`.
double resolved_dt(const NetworkSpec& spec, const IntegratorConfig& cfg);

/// Per-layer dx^A/dt. A tau = 0 top layer gets zeros; it is handled by
/// equilibrate_top_layer instead.
std::vector<Tensor> velocity(const NetworkSpec& spec, const NetworkState& state);

/// Largest |dx/dt| entry over all layers.
double max_velocity(std::span<const Tensor> v);

/// Sets the top layer to its fixed point given the layer below,
/// x^top = forward_message(last connection, g^{top-1}). Requires tau_top = 0.
NetworkState equilibrate_top_layer(const NetworkSpec& spec, const NetworkState& state);

struct TraceRow {
  double t = 0.0;
  double energy = 0.0;
  double energy_rate = 0.0;
  double max_velocity = 0.0;
  std::vector<double> layer_norms;
  /// Adaptive stepping hit dt_min without lowering the energy.
  bool flagged = false;
  EnergyBreakdown breakdown;
};

struct RelaxationTrace {
  std::vector<TraceRow> rows;

  /// Header `t,energy,dE_dt,max_velocity,norm_<layer>...`; with `breakdown`
  /// the columns `legendre_<layer>...,interaction_<k>...` follow.
  void write_csv(std::ostream& os, const NetworkSpec& spec, bool breakdown = false) const;
};

struct StepResult {
  NetworkState state;
  double dt = 0.0;
  bool flagged = false;
};

/// One integrator step (Euler or RK4), with adaptive energy-based halving
/// when enabled. Throws DomainError on NaN/Inf in the state.
StepResult step(const NetworkSpec& spec, const NetworkState& state, const IntegratorConfig& cfg);

struct Relaxation {
  NetworkState state;
  RelaxationTrace trace;
  bool converged = false;
  std::size_t steps = 0;
};

/// Integrates until max |dx/dt| < convergence_eps or max_steps is reached.
/// The trace holds the initial state and every accepted step.
Relaxation relax(const NetworkSpec& spec, const NetworkState& initial, const IntegratorConfig& cfg,
                 bool record_breakdown = false);

}  // namespace ham
