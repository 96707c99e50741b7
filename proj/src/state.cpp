#include "ham/state.hpp"

#include <cmath>

namespace ham {

NetworkState zero_state(const NetworkSpec& spec) {
  NetworkState s;
  s.layers.reserve(spec.layers.size());
  for (const auto& l : spec.layers) s.layers.emplace_back(l.shape.size(), 0.0);
  return s;
}

NetworkState cue_state(const NetworkSpec& spec, std::span<const double> cue) {
  NetworkState s = zero_state(spec);
  require_size(cue, spec.layers.at(0).shape, "cue for layer '" + spec.layers[0].name + "'");
  s.layers[0].assign(cue.begin(), cue.end());
  return s;
}

void check_state(const NetworkSpec& spec, const NetworkState& state) {
  if (state.layers.size() != spec.layers.size()) {
    throw ShapeError("state has " + std::to_string(state.layers.size()) + " layers, network has " +
                     std::to_string(spec.layers.size()));
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    require_size(state.layers[i], spec.layers[i].shape,
                 "state of layer " + std::to_string(i + 1) + " '" + spec.layers[i].name + "'");
  }
}

void check_finite(const NetworkSpec& spec, const NetworkState& state) {
  for (std::size_t i = 0; i < state.layers.size(); ++i) {
    for (double v : state.layers[i]) {
      if (!std::isfinite(v)) {
        throw DomainError("non-finite activity in layer " + std::to_string(i + 1) + " '" +
                          spec.layers[i].name + "' at t=" + std::to_string(state.t));
      }
    }
  }
}

std::vector<Tensor> layer_activations(const NetworkSpec& spec, const NetworkState& state) {
  check_state(spec, state);
  std::vector<Tensor> g;
  g.reserve(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    g.push_back(activations(spec.layers[i].lagrangian, spec.layers[i].shape, state.layers[i]));
  }
  return g;
}

std::vector<Tensor> layer_drives(const NetworkSpec& spec, std::span<const Tensor> g) {
  std::vector<Tensor> drive;
  drive.reserve(spec.layers.size());
  for (const auto& l : spec.layers) drive.emplace_back(l.shape.size(), 0.0);
  for (std::size_t c = 0; c < spec.connections.size(); ++c) {
    const Tensor up = spec.forward(c, g[c]);
    const Tensor down = spec.backward(c, g[c + 1]);
    axpy(1.0, up, drive[c + 1]);
    axpy(1.0, down, drive[c]);
  }
  return drive;
}

}  // namespace ham
