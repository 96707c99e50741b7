#include "ham/fully_connected.hpp"

namespace ham {

std::size_t FullyConnectedNetwork::size() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.shape.size();
  return n;
}

namespace {

template <typename Fn>
void for_each_group(const FullyConnectedNetwork& net, Fn&& fn) {
  std::size_t offset = 0;
  for (const auto& g : net.groups) {
    fn(g, offset);
    offset += g.shape.size();
  }
}

void check(const FullyConnectedNetwork& net, std::span<const double> x) {
  const std::size_t n = net.size();
  if (x.size() != n) {
    throw ShapeError("fully connected state: expected " + std::to_string(n) + " values, got " +
                     std::to_string(x.size()));
  }
  if (net.weights.size() != n * n) {
    throw ShapeError("fully connected weights: expected " + std::to_string(n * n) + " values");
  }
}

Tensor matvec(const FullyConnectedNetwork& net, std::span<const double> g) {
  const std::size_t n = g.size();
  Tensor out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i] = dot(std::span(net.weights).subspan(i * n, n), g);
  return out;
}

}  // namespace

FullyConnectedNetwork embed_fully_connected(const NetworkSpec& spec) {
  require_valid(spec);
  FullyConnectedNetwork net;
  std::vector<std::size_t> offset;
  std::size_t n = 0;
  for (const auto& l : spec.layers) {
    net.groups.push_back({l.shape, l.lagrangian, l.tau});
    offset.push_back(n);
    n += l.shape.size();
  }
  net.weights.assign(n * n, 0.0);
  for (std::size_t c = 0; c < spec.connections.size(); ++c) {
    const Shape& lo = spec.layers[c].shape;
    Tensor e(lo.size(), 0.0);
    for (std::size_t j = 0; j < lo.size(); ++j) {
      e[j] = 1.0;
      const Tensor col = spec.forward(c, e);
      e[j] = 0.0;
      for (std::size_t i = 0; i < col.size(); ++i) {
        const std::size_t I = offset[c + 1] + i, J = offset[c] + j;
        net.weights[I * n + J] = col[i];
        net.weights[J * n + I] = col[i];
      }
    }
  }
  return net;
}

Tensor flatten_state(std::span<const Tensor> layers) {
  Tensor out;
  for (const auto& t : layers) out.insert(out.end(), t.begin(), t.end());
  return out;
}

Tensor fc_activations(const FullyConnectedNetwork& net, std::span<const double> x) {
  check(net, x);
  Tensor g(x.size());
  for_each_group(net, [&](const NeuronGroup& grp, std::size_t off) {
    const std::size_t m = grp.shape.size();
    const Tensor gg = activations(grp.lagrangian, grp.shape, x.subspan(off, m));
    std::copy(gg.begin(), gg.end(), g.begin() + static_cast<std::ptrdiff_t>(off));
  });
  return g;
}

Tensor fc_velocity(const FullyConnectedNetwork& net, std::span<const double> x) {
  const Tensor g = fc_activations(net, x);
  Tensor v = matvec(net, g);
  for_each_group(net, [&](const NeuronGroup& grp, std::size_t off) {
    if (!(grp.tau > 0.0)) throw DomainError("fully connected network: every tau must be positive");
    for (std::size_t i = off; i < off + grp.shape.size(); ++i) v[i] = (v[i] - x[i]) / grp.tau;
  });
  return v;
}

double fc_energy(const FullyConnectedNetwork& net, std::span<const double> x) {
  const Tensor g = fc_activations(net, x);
  double lag = 0.0;
  for_each_group(net, [&](const NeuronGroup& grp, std::size_t off) {
    lag += value(grp.lagrangian, grp.shape, x.subspan(off, grp.shape.size()));
  });
  return dot(x, g) - lag - 0.5 * dot(g, matvec(net, g));
}

double fc_energy_rate(const FullyConnectedNetwork& net, std::span<const double> x) {
  const Tensor v = fc_velocity(net, x);
  // M_IK = tau_I Hess_IK; the Hessian is block diagonal over groups
  double rate = 0.0;
  for_each_group(net, [&](const NeuronGroup& grp, std::size_t off) {
    const std::size_t m = grp.shape.size();
    const auto vs = std::span(v).subspan(off, m);
    Tensor tv(vs.begin(), vs.end());
    for (double& t : tv) t *= grp.tau;
    const Tensor htv = hessian_vector_product(grp.lagrangian, grp.shape, x.subspan(off, m), tv);
    rate -= dot(vs, htv);
  });
  return rate;
}

}  // namespace ham
