#pragma once

#include "ham/lagrangian.hpp"
#include "ham/tensor.hpp"
#include "ham/topology.hpp"

#include <span>
#include <vector>

namespace ham {

/// Every neuron connected to every other through one symmetric matrix W.
/// The Lagrangian is a sum over contiguous neuron groups, each with its own
/// Lagrangian and time constant:
///
///   tau_I dx_I/dt = sum_J W_IJ g_J - x_I
///   E = sum_I x_I g_I - L - 1/2 g^T W g
///   dE/dt = -sum_{I,K} dx_K/dt Hess(L)_KI tau_I dx_I/dt
struct NeuronGroup {
  Shape shape;
  Lagrangian lagrangian;
  double tau = 1.0;
};

struct FullyConnectedNetwork {
  std::vector<NeuronGroup> groups;
  /// [size x size] row-major, expected symmetric.
  Tensor weights;

  std::size_t size() const;
};

/// Dense embedding of a layered network: W holds each connection's operator
/// in the (upper, lower) block and its transpose in the (lower, upper) block.
FullyConnectedNetwork embed_fully_connected(const NetworkSpec& spec);

/// Concatenate per-layer tensors into one neuron vector.
Tensor flatten_state(std::span<const Tensor> layers);

Tensor fc_activations(const FullyConnectedNetwork& net, std::span<const double> x);
Tensor fc_velocity(const FullyConnectedNetwork& net, std::span<const double> x);
double fc_energy(const FullyConnectedNetwork& net, std::span<const double> x);
double fc_energy_rate(const FullyConnectedNetwork& net, std::span<const double> x);

}  // namespace ham
