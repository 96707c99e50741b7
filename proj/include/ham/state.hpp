#pragma once

#include "ham/tensor.hpp"
#include "ham/topology.hpp"

#include <span>
#include <vector>

namespace ham {

/// Per-layer activities x^A at time t.
struct NetworkState {
  std::vector<Tensor> layers;
  double t = 0.0;
};

NetworkState zero_state(const NetworkSpec& spec);

/// Retrieval initialization: input layer holds the cue, hidden layers zero.
NetworkState cue_state(const NetworkSpec& spec, std::span<const double> cue);

/// Throws ShapeError naming the first layer whose tensor has the wrong size.
void check_state(const NetworkSpec& spec, const NetworkState& state);

/// Throws DomainError naming the first layer holding a NaN or Inf.
void check_finite(const NetworkSpec& spec, const NetworkState& state);

/// g^A = dL^A/dx^A for every layer.
std::vector<Tensor> layer_activations(const NetworkSpec& spec, const NetworkState& state);

/// Total synaptic input to every layer: upward message from the layer below
/// plus downward message from the layer above (zero at the boundaries).
std::vector<Tensor> layer_drives(const NetworkSpec& spec, std::span<const Tensor> activations);

}  // namespace ham
