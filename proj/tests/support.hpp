#pragma once

// Test-only oracles and generators. Nothing here calls into the code paths it
// is used to check: finite differences only evaluate the scalar functions,
// and the brute-force operators are written with explicit index arithmetic.

#include "ham/rng.hpp"
#include "ham/tensor.hpp"
#include "ham/topology.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace ham::testing {

/// Five-point central difference of a scalar function of one variable at
/// zero; the error is O(h^4) plus roundoff of order eps * |f| / h.
inline double fd_derivative(const std::function<double(double)>& f, double h) {
  return (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
}

inline Tensor fd_gradient(const std::function<double(const Tensor&)>& f, Tensor x, double h = 1e-3) {
  Tensor g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    g[i] = fd_derivative(
        [&](double d) {
          x[i] = saved + d;
          const double v = f(x);
          x[i] = saved;
          return v;
        },
        h);
  }
  return g;
}

/// d/ds <v, grad(x + s v)> at s = 0.
inline double fd_directional(const std::function<Tensor(const Tensor&)>& grad, const Tensor& x, const Tensor& v,
                             double h = 1e-3) {
  return fd_derivative(
      [&](double s) {
        Tensor y = x;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * v[i];
        const Tensor g = grad(y);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += v[i] * g[i];
        return acc;
      },
      h);
}

inline Tensor random_tensor(Rng& rng, std::size_t n, double scale = 1.0) {
  Tensor t(n);
  for (double& v : t) v = scale * rng.gaussian();
  return t;
}

/// Number of window placements along one axis, by enumeration.
inline std::size_t brute_extent(std::size_t extent, std::size_t window, std::size_t stride) {
  std::size_t n = 0;
  for (std::size_t start = 0; start + window <= extent; start += stride) ++n;
  return n;
}

/// Dense matrix of a connection's upward operator, assembled from its
/// definition entry by entry (rows = upper neurons, cols = lower neurons).
inline std::vector<std::vector<double>> operator_matrix(const Connection& c, const Shape& lo, const Shape& up) {
  std::vector<std::vector<double>> m(up.size(), std::vector<double>(lo.size(), 0.0));
  switch (c.kind) {
    case Connection::Kind::Dense:
      for (std::size_t r = 0; r < c.rows; ++r) {
        for (std::size_t q = 0; q < c.cols; ++q) m[r][q] = c.weights[r * c.cols + q];
      }
      break;
    case Connection::Kind::Conv:
      for (std::size_t oy = 0; oy < up.height; ++oy)
        for (std::size_t ox = 0; ox < up.width; ++ox)
          for (std::size_t co = 0; co < c.out_channels; ++co)
            for (std::size_t ky = 0; ky < c.window; ++ky)
              for (std::size_t kx = 0; kx < c.window; ++kx)
                for (std::size_t ci = 0; ci < c.in_channels; ++ci) {
                  const std::size_t row = (oy * up.width + ox) * up.channels + co;
                  const std::size_t col =
                      ((oy * c.stride + ky) * lo.width + (ox * c.stride + kx)) * lo.channels + ci;
                  const std::size_t k = ((ky * c.window + kx) * c.in_channels + ci) * c.out_channels + co;
                  m[row][col] += c.weights[k];
                }
      break;
    case Connection::Kind::AvgPool:
      for (std::size_t oy = 0; oy < up.height; ++oy)
        for (std::size_t ox = 0; ox < up.width; ++ox)
          for (std::size_t ch = 0; ch < up.channels; ++ch)
            for (std::size_t ky = 0; ky < c.window; ++ky)
              for (std::size_t kx = 0; kx < c.window; ++kx) {
                const std::size_t row = (oy * up.width + ox) * up.channels + ch;
                const std::size_t col = ((oy * c.window + ky) * lo.width + (ox * c.window + kx)) * lo.channels + ch;
                m[row][col] += 1.0 / static_cast<double>(c.window * c.window);
              }
      break;
  }
  return m;
}

struct RandomNetOptions {
  std::size_t min_layers = 2;
  std::size_t max_layers = 5;
  double weight_scale = 0.6;
  bool allow_quadratic_hidden = true;
  bool allow_elementwise = true;
  double tau_min = 0.5;
  double tau_max = 2.0;
};

inline Lagrangian random_lagrangian(Rng& rng, const Shape& shape, const RandomNetOptions& o, bool input) {
  if (input) {
    switch (rng.below(o.allow_elementwise ? 3 : 1)) {
      case 0:
        return Lagrangian::quadratic();
      case 1:
        return Lagrangian::elementwise(Lagrangian::Function::LogCosh);
      default:
        return Lagrangian::elementwise(Lagrangian::Function::Relu);
    }
  }
  const double beta = 0.5 + 2.5 * rng.uniform();
  for (;;) {
    switch (rng.below(6)) {
      case 0:
        if (o.allow_quadratic_hidden) return Lagrangian::quadratic();
        break;
      case 1:
      case 2:
        return Lagrangian::log_sum_exp(beta);
      case 3:
        if (shape.is_map() && shape.channels > 1) return Lagrangian::channel_log_sum_exp(beta);
        break;
      case 4:
        if (o.allow_elementwise) return Lagrangian::elementwise(Lagrangian::Function::LogCosh);
        break;
      default:
        if (o.allow_elementwise) return Lagrangian::elementwise(Lagrangian::Function::Relu);
        break;
    }
  }
}

/// Random valid network mixing dense, conv and avg-pool connections.
inline NetworkSpec random_network(Rng& rng, const RandomNetOptions& o = {}) {
  NetworkSpec spec;
  const std::size_t depth = o.min_layers + rng.below(o.max_layers - o.min_layers + 1);
  Shape shape = rng.below(3) == 0 ? Shape::flat(3 + rng.below(6))
                                  : Shape::map(5 + rng.below(4), 5 + rng.below(4), 1 + rng.below(2));
  auto tau = [&] { return o.tau_min + (o.tau_max - o.tau_min) * rng.uniform(); };
  spec.layers.push_back({"l1", shape, random_lagrangian(rng, shape, o, true), tau()});
  for (std::size_t a = 1; a < depth; ++a) {
    const Shape lo = spec.layers.back().shape;
    Shape up;
    Connection c;
    const auto pick = rng.below(3);
    if (lo.is_map() && pick == 0 && std::min(lo.height, lo.width) >= 3) {
      const std::size_t w = 2 + rng.below(2), s = 1 + rng.below(2), cout = 1 + rng.below(3);
      up = Shape::map(feature_map_extent(lo.height, w, s), feature_map_extent(lo.width, w, s), cout);
      const double scale = o.weight_scale / std::sqrt(static_cast<double>(w * w * lo.channels));
      c = Connection::conv(a - 1, w, lo.channels, cout, s, random_tensor(rng, w * w * lo.channels * cout, scale));
    } else if (lo.is_map() && pick == 1 && std::min(lo.height, lo.width) >= 4) {
      up = Shape::map(lo.height / 2, lo.width / 2, lo.channels);
      c = Connection::avg_pool(a - 1, 2);
    } else {
      up = rng.below(3) == 0 ? Shape::map(2, 2, 1 + rng.below(2)) : Shape::flat(2 + rng.below(5));
      const double scale = o.weight_scale / std::sqrt(static_cast<double>(std::max(lo.size(), up.size())));
      c = Connection::dense(a - 1, up.size(), lo.size(), random_tensor(rng, up.size() * lo.size(), scale));
    }
    spec.layers.push_back({"l" + std::to_string(a + 1), up, random_lagrangian(rng, up, o, false), tau()});
    spec.connections.push_back(std::move(c));
  }
  return spec;
}

}  // namespace ham::testing
