#include "ham/energy.hpp"
#include "ham/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace ham {

EnergyBreakdown global_energy(const NetworkSpec& spec, const NetworkState& state) {
  const auto g = layer_activations(spec, state);
  EnergyBreakdown e;
  for (std::size_t a = 0; a < spec.layers.size(); ++a) {
    const auto& l = spec.layers[a];
    const double term = dot(state.layers[a], g[a]) - value(l.lagrangian, l.shape, state.layers[a]);
    e.legendre.push_back(term);
    e.total += term;
  }
  for (std::size_t c = 0; c < spec.connections.size(); ++c) {
    const double term = -dot(g[c + 1], spec.forward(c, g[c]));
    e.interaction.push_back(term);
    e.total += term;
  }
  return e;
}

double energy_rate(const NetworkSpec& spec, const NetworkState& state) {
  for (std::size_t a = 0; a < spec.layers.size(); ++a) {
    if (!(spec.layers[a].tau > 0.0)) {
      throw DomainError("energy_rate: layer " + std::to_string(a + 1) + " '" + spec.layers[a].name +
                        "' has tau = 0; equilibrate it and use energy_rate_adiabatic");
    }
  }
  const auto v = velocity(spec, state);
  double rate = 0.0;
  for (std::size_t a = 0; a < spec.layers.size(); ++a) {
    const auto& l = spec.layers[a];
    rate -= l.tau * hessian_quadratic_form(l.lagrangian, l.shape, state.layers[a], v[a]);
  }
  return rate;
}

double top_layer_residual(const NetworkSpec& spec, const NetworkState& state) {
  check_state(spec, state);
  const std::size_t top = spec.layers.size() - 1;
  Tensor drive(spec.layers[top].shape.size(), 0.0);
  if (top > 0) {
    const auto& below = spec.layers[top - 1];
    drive = spec.forward(top - 1, activations(below.lagrangian, below.shape, state.layers[top - 1]));
  }
  double r = 0.0;
  for (std::size_t i = 0; i < drive.size(); ++i) r = std::max(r, std::abs(drive[i] - state.layers[top][i]));
  return r;
}

namespace {

void require_equilibrated_top(const NetworkSpec& spec, const NetworkState& state, const char* who) {
  if (!spec.adiabatic_top()) {
    throw DomainError(std::string(who) + ": top layer '" + spec.top().name + "' must have tau = 0");
  }
  const double r = top_layer_residual(spec, state);
  const double scale = 1.0 + max_abs(state.layers.back());
  if (r > 1e-12 * scale) {
    throw DomainError(std::string(who) + ": top layer '" + spec.top().name +
                      "' is not equilibrated (residual " + std::to_string(r) + ")");
  }
}

}  // namespace

double energy_rate_adiabatic(const NetworkSpec& spec, const NetworkState& state) {
  require_equilibrated_top(spec, state, "energy_rate_adiabatic");
  const auto v = velocity(spec, state);
  double rate = 0.0;
  for (std::size_t a = 0; a + 1 < spec.layers.size(); ++a) {
    const auto& l = spec.layers[a];
    rate -= l.tau * hessian_quadratic_form(l.lagrangian, l.shape, state.layers[a], v[a]);
  }
  return rate;
}

double reduced_energy_adiabatic(const NetworkSpec& spec, const NetworkState& state) {
  require_equilibrated_top(spec, state, "reduced_energy_adiabatic");
  const std::size_t top = spec.layers.size() - 1;
  const auto g = layer_activations(spec, state);
  double e = 0.0;
  for (std::size_t a = 0; a < top; ++a) {
    const auto& l = spec.layers[a];
    e += dot(state.layers[a], g[a]) - value(l.lagrangian, l.shape, state.layers[a]);
  }
  for (std::size_t c = 0; c + 1 < top; ++c) e -= dot(g[c + 1], spec.forward(c, g[c]));
  const auto& t = spec.layers[top];
  return e - value(t.lagrangian, t.shape, state.layers[top]);
}

double energy_lower_bound(const NetworkSpec& spec) {
  require_valid(spec);
  if (spec.layers[0].lagrangian.kind != Lagrangian::Kind::Quadratic) {
    throw DomainError("energy_lower_bound: input layer must be Quadratic");
  }
  // total probability mass of each softmax layer's activation vector
  std::vector<double> mass(spec.layers.size(), 0.0);
  double bound = 0.0;
  for (std::size_t a = 1; a < spec.layers.size(); ++a) {
    const auto& l = spec.layers[a];
    if (!l.lagrangian.is_softmax()) {
      throw DomainError("energy_lower_bound: layer '" + l.name + "' is not softmax-type");
    }
    const std::size_t n = softmax_group_size(l.lagrangian, l.shape);
    const double groups = static_cast<double>(l.shape.size() / n);
    mass[a] = groups;
    bound -= groups * std::log(static_cast<double>(n)) / l.lagrangian.beta;
  }
  for (std::size_t c = 0; c < spec.connections.size(); ++c) {
    const Shape& lo = spec.layers[c].shape;
    const Shape& up = spec.layers[c + 1].shape;
    if (c == 0) {
      // 1/2|x|^2 - <x, B g> >= -1/2 |B g|^2 with |B g| <= mass * max column norm
      double col = 0.0;
      Tensor e(up.size(), 0.0);
      for (std::size_t j = 0; j < up.size(); ++j) {
        e[j] = 1.0;
        col = std::max(col, norm2(spec.backward(c, e)));
        e[j] = 0.0;
      }
      const double b = mass[1] * col;
      bound -= 0.5 * b * b;
      continue;
    }
    double entry = 0.0;
    Tensor e(lo.size(), 0.0);
    for (std::size_t j = 0; j < lo.size(); ++j) {
      e[j] = 1.0;
      entry = std::max(entry, max_abs(spec.forward(c, e)));
      e[j] = 0.0;
    }
    bound -= mass[c] * mass[c + 1] * entry;
  }
  return bound;
}

}  // namespace ham
