#include "ham/dynamics.hpp"
#include "ham/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ham {

namespace {

constexpr int kMaxHalvings = 10;

NetworkState advance(const NetworkState& s, const std::vector<Tensor>& v, double h) {
  NetworkState out = s;
  for (std::size_t a = 0; a < out.layers.size(); ++a) axpy(h, v[a], out.layers[a]);
  out.t += h;
  return out;
}

// Velocity field as seen by the integrator; clamping freezes the input layer.
std::vector<Tensor> field(const NetworkSpec& spec, const NetworkState& s, const IntegratorConfig& cfg) {
  std::vector<Tensor> v = velocity(spec, s);
  if (cfg.clamp_input) std::fill(v[0].begin(), v[0].end(), 0.0);
  return v;
}

NetworkState settle(const NetworkSpec& spec, NetworkState s) {
  if (spec.adiabatic_top()) return equilibrate_top_layer(spec, s);
  return s;
}

NetworkState raw_step(const NetworkSpec& spec, const NetworkState& s, const IntegratorConfig& cfg,
                      double h) {
  if (cfg.method == IntegratorConfig::Method::Euler) {
    return settle(spec, advance(s, field(spec, s, cfg), h));
  }
  const auto k1 = field(spec, s, cfg);
  const auto k2 = field(spec, settle(spec, advance(s, k1, h / 2)), cfg);
  const auto k3 = field(spec, settle(spec, advance(s, k2, h / 2)), cfg);
  const auto k4 = field(spec, settle(spec, advance(s, k3, h)), cfg);
  NetworkState out = s;
  for (std::size_t a = 0; a < out.layers.size(); ++a) {
    for (std::size_t i = 0; i < out.layers[a].size(); ++i) {
      out.layers[a][i] += h / 6.0 * (k1[a][i] + 2.0 * k2[a][i] + 2.0 * k3[a][i] + k4[a][i]);
    }
  }
  out.t += h;
  return settle(spec, std::move(out));
}

double rate_of(const NetworkSpec& spec, const NetworkState& s, const IntegratorConfig& cfg,
               const std::vector<Tensor>& v) {
  if (!cfg.clamp_input) {
    return spec.adiabatic_top() ? energy_rate_adiabatic(spec, s) : energy_rate(spec, s);
  }
  // a clamped input layer does not move, so only the free layers contribute
  double rate = 0.0;
  for (std::size_t a = 1; a < spec.layers.size(); ++a) {
    const auto& l = spec.layers[a];
    if (l.tau > 0.0) rate -= l.tau * hessian_quadratic_form(l.lagrangian, l.shape, s.layers[a], v[a]);
  }
  return rate;
}

TraceRow make_row(const NetworkSpec& spec, const NetworkState& s, const IntegratorConfig& cfg,
                  const std::vector<Tensor>& v, bool flagged, bool breakdown) {
  TraceRow row;
  row.t = s.t;
  EnergyBreakdown e = global_energy(spec, s);
  row.energy = e.total;
  row.energy_rate = rate_of(spec, s, cfg, v);
  const double max_vel = max_velocity(v);
  row.max_velocity = max_vel;
  for (const auto& x : s.layers) row.layer_norms.push_back(norm2(x));
  row.flagged = flagged;
  if (breakdown) row.breakdown = std::move(e);
  return row;
}

}  // namespace

double resolved_dt(const NetworkSpec& spec, const IntegratorConfig& cfg) {
  if (cfg.dt > 0.0) return cfg.dt;
  double tmin = std::numeric_limits<double>::infinity();
  for (const auto& l : spec.layers) {
    if (l.tau > 0.0) tmin = std::min(tmin, l.tau);
  }
  if (!std::isfinite(tmin)) throw DomainError("no layer with positive tau to derive a default dt");
  return 0.1 * tmin;
}

std::vector<Tensor> velocity(const NetworkSpec& spec, const NetworkState& state) {
  const auto g = layer_activations(spec, state);
  auto v = layer_drives(spec, g);
  for (std::size_t a = 0; a < spec.layers.size(); ++a) {
    const double tau = spec.layers[a].tau;
    if (tau == 0.0) {
      if (a + 1 != spec.layers.size()) {
        throw DomainError("layer " + std::to_string(a + 1) + " '" + spec.layers[a].name +
                          "' has tau = 0 but is not the top layer");
      }
      std::fill(v[a].begin(), v[a].end(), 0.0);
      continue;
    }
    for (std::size_t i = 0; i < v[a].size(); ++i) v[a][i] = (v[a][i] - state.layers[a][i]) / tau;
  }
  return v;
}

double max_velocity(std::span<const Tensor> v) {
  double m = 0.0;
  for (const auto& t : v) m = std::max(m, max_abs(t));
  return m;
}

NetworkState equilibrate_top_layer(const NetworkSpec& spec, const NetworkState& state) {
  check_state(spec, state);
  if (!spec.adiabatic_top()) {
    throw DomainError("equilibrate_top_layer: top layer '" + spec.top().name + "' has tau = " +
                      std::to_string(spec.top().tau) + ", expected 0");
  }
  NetworkState out = state;
  const std::size_t top = spec.layers.size() - 1;
  if (top == 0) {
    // an isolated layer has no input: its fixed point is zero
    std::fill(out.layers[0].begin(), out.layers[0].end(), 0.0);
    return out;
  }
  const auto& below = spec.layers[top - 1];
  const Tensor g = activations(below.lagrangian, below.shape, state.layers[top - 1]);
  out.layers[top] = spec.forward(top - 1, g);
  return out;
}

void RelaxationTrace::write_csv(std::ostream& os, const NetworkSpec& spec, bool breakdown) const {
  os << "t,energy,dE_dt,max_velocity";
  for (const auto& l : spec.layers) os << ",norm_" << l.name;
  if (breakdown) {
    for (const auto& l : spec.layers) os << ",legendre_" << l.name;
    for (std::size_t c = 0; c < spec.connections.size(); ++c) os << ",interaction_" << c + 1;
  }
  os << '\n';
  for (const auto& r : rows) {
    os << format_double(r.t) << ',' << format_double(r.energy) << ',' << format_double(r.energy_rate)
       << ',' << format_double(r.max_velocity);
    for (double n : r.layer_norms) os << ',' << format_double(n);
    if (breakdown) {
      for (double v : r.breakdown.legendre) os << ',' << format_double(v);
      for (double v : r.breakdown.interaction) os << ',' << format_double(v);
    }
    os << '\n';
  }
}

StepResult step(const NetworkSpec& spec, const NetworkState& state, const IntegratorConfig& cfg) {
  check_state(spec, state);
  check_finite(spec, state);
  const double dt = resolved_dt(spec, cfg);
  if (!(dt > 0.0)) throw DomainError("dt must be positive");

  StepResult result{raw_step(spec, state, cfg, dt), dt, false};
  check_finite(spec, result.state);
  if (!cfg.adaptive) return result;

  const double e0 = global_energy(spec, state).total;
  double h = dt;
  for (int k = 0; k < kMaxHalvings; ++k) {
    if (global_energy(spec, result.state).total <= e0) return result;
    h *= 0.5;
    result = {raw_step(spec, state, cfg, h), h, false};
    check_finite(spec, result.state);
  }
  result.flagged = global_energy(spec, result.state).total > e0;
  return result;
}

Relaxation relax(const NetworkSpec& spec, const NetworkState& initial, const IntegratorConfig& cfg,
                 bool record_breakdown) {
  require_valid(spec);
  check_state(spec, initial);
  if (!(cfg.convergence_eps > 0.0)) throw DomainError("convergence_eps must be positive");

  Relaxation r;
  r.state = spec.adiabatic_top() ? equilibrate_top_layer(spec, initial) : initial;
  check_finite(spec, r.state);

  auto v = field(spec, r.state, cfg);
  double vmax = max_velocity(v);
  r.trace.rows.push_back(make_row(spec, r.state, cfg, v, false, record_breakdown));
  while (vmax >= cfg.convergence_eps && r.steps < cfg.max_steps) {
    StepResult s = step(spec, r.state, cfg);
    r.state = std::move(s.state);
    ++r.steps;
    v = field(spec, r.state, cfg);
    vmax = max_velocity(v);
    r.trace.rows.push_back(make_row(spec, r.state, cfg, v, s.flagged, record_breakdown));
  }
  r.converged = vmax < cfg.convergence_eps;
  return r;
}

}  // namespace ham
