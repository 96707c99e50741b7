#pragma once

// The three reference architectures: one softmax hidden layer over a
// quadratic input, two dense softmax hidden layers, and a convolutional
// feature layer followed by a dense softmax layer.

#include "ham/rng.hpp"
#include "ham/topology.hpp"

#include <cmath>

namespace ham::examples {

inline Tensor gaussian_weights(std::size_t n, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w(n);
  for (double& v : w) v = scale * rng.gaussian();
  return w;
}

inline NetworkSpec one_hidden(std::size_t n1 = 6, std::size_t n2 = 4, double beta = 2.0, double tau_hidden = 0.5,
                              std::uint64_t seed = 1) {
  NetworkSpec s;
  s.layers = {{"input", Shape::flat(n1), Lagrangian::quadratic(), 1.0},
              {"hidden", Shape::flat(n2), Lagrangian::log_sum_exp(beta), tau_hidden}};
  s.connections = {Connection::dense(0, n2, n1, gaussian_weights(n1 * n2, 0.5, seed))};
  return s;
}

inline NetworkSpec two_dense_hidden(double tau_top = 0.2, std::size_t n1 = 6, std::size_t n2 = 5,
                                    std::size_t n3 = 3, double beta2 = 2.0, double beta3 = 3.0,
                                    std::uint64_t seed = 2) {
  NetworkSpec s;
  s.layers = {{"input", Shape::flat(n1), Lagrangian::quadratic(), 1.0},
              {"hidden", Shape::flat(n2), Lagrangian::log_sum_exp(beta2), 0.5},
              {"top", Shape::flat(n3), Lagrangian::log_sum_exp(beta3), tau_top}};
  s.connections = {Connection::dense(0, n2, n1, gaussian_weights(n1 * n2, 0.5, seed)),
                   Connection::dense(1, n3, n2, gaussian_weights(n2 * n3, 0.8, seed + 1))};
  return s;
}

inline NetworkSpec conv_hidden(double tau_top = 0.2, std::size_t side = 6, std::size_t window = 3,
                               std::size_t stride = 1, std::size_t cout = 3, std::size_t n3 = 4,
                               double beta2 = 2.0, double beta3 = 3.0, std::uint64_t seed = 3) {
  const std::size_t lt = feature_map_extent(side, window, stride);
  const Shape features = Shape::map(lt, lt, cout);
  NetworkSpec s;
  s.layers = {{"image", Shape::map(side, side, 1), Lagrangian::quadratic(), 1.0},
              {"features", features, Lagrangian::channel_log_sum_exp(beta2), 0.5},
              {"top", Shape::flat(n3), Lagrangian::log_sum_exp(beta3), tau_top}};
  s.connections = {
      Connection::conv(0, window, 1, cout, stride, gaussian_weights(window * window * cout, 0.4, seed)),
      Connection::dense(1, n3, features.size(), gaussian_weights(n3 * features.size(), 0.3, seed + 1))};
  return s;
}

}  // namespace ham::examples
