#pragma once

#include "ham/state.hpp"
#include "ham/topology.hpp"

#include <vector>

namespace ham {

struct EnergyBreakdown {
  /// sum_i x_i g_i - L per layer.
  std::vector<double> legendre;
  /// -<g^{A+1}, forward_message(c, g^A)> per connection.
  std::vector<double> interaction;
  double total = 0.0;
};

EnergyBreakdown global_energy(const NetworkSpec& spec, const NetworkState& state);

/// dE/dt = -sum_A tau_A (dx^A/dt)^T Hess(L^A) (dx^A/dt) along the continuous
/// dynamics. Requires every tau to be positive.
double energy_rate(const NetworkSpec& spec, const NetworkState& state);

/// Rate of the energy when the top layer (tau = 0) is slaved to the layer
/// below. Only the lower layers contribute. Requires an equilibrated top.
double energy_rate_adiabatic(const NetworkSpec& spec, const NetworkState& state);

/// Energy with the top layer eliminated: its Legendre term and its
/// interaction with the layer below cancel, leaving -L^top(z). Requires
/// tau_top = 0 and an equilibrated top layer.
double reduced_energy_adiabatic(const NetworkSpec& spec, const NetworkState& state);

/// max |drive - x| on the top layer; zero when it is at its own fixed point.
double top_layer_residual(const NetworkSpec& spec, const NetworkState& state);

/// Lower bound on the energy for stacks with a Quadratic input layer and
/// softmax-type layers above it. Each softmax group contributes at least
/// -ln(n)/beta, each interaction between probability-like layers at least
/// -(mass_up * mass_low * max|operator entry|), and the input layer at least
/// -1/2 ||B g||^2 where B is the transpose of the first connection. Throws
/// DomainError for other Lagrangian arrangements.
double energy_lower_bound(const NetworkSpec& spec);

}  // namespace ham
