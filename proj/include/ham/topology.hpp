#pragma once

#include "ham/lagrangian.hpp"
#include "ham/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ham {

struct LayerSpec {
  std::string name;
  Shape shape;
  Lagrangian lagrangian;
  /// Time constant. Zero is allowed only on the top layer, which then follows
  /// its input instantaneously (see equilibrate_top_layer).
  double tau = 1.0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Weights between layer `lower` and layer `lower + 1`. A single tensor serves
/// both directions: the upward message applies the operator, the downward
/// message applies its transpose.
///
/// Dense weights are [upper size x lower size] row-major; map-shaped endpoints
/// are flattened row-major. Conv kernels are [w, w, c_in, c_out] row-major and
/// act as an unpadded strided cross-correlation. AvgPool averages
/// non-overlapping p x p windows per channel and carries no weights.
struct Connection {
  enum class Kind { Dense, Conv, AvgPool };

  Kind kind = Kind::Dense;
  std::size_t lower = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t window = 1;
  std::size_t stride = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Tensor weights;

  static Connection dense(std::size_t lower, std::size_t rows, std::size_t cols, Tensor weights);
  static Connection conv(std::size_t lower, std::size_t window, std::size_t in_channels,
                         std::size_t out_channels, std::size_t stride, Tensor kernel);
  static Connection avg_pool(std::size_t lower, std::size_t window);

  std::size_t weight_count() const;
  std::string str() const;

  friend bool operator==(const Connection&, const Connection&) = default;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  /// connections[i] links layers i and i + 1.
  std::vector<Connection> connections;

  std::size_t depth() const { return layers.size(); }
  const LayerSpec& top() const { return layers.back(); }
  bool adiabatic_top() const { return !layers.empty() && layers.back().tau == 0.0; }

  /// Upward message through connections[c]: drive for layer c + 1.
  Tensor forward(std::size_t c, std::span<const double> g_below) const;
  /// Downward message through connections[c]: drive for layer c.
  Tensor backward(std::size_t c, std::span<const double> g_above) const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// floor((L - w) / s) + 1; throws DomainError unless 1 <= w <= L and s >= 1.
std::size_t feature_map_extent(std::size_t extent, std::size_t window, std::size_t stride);

/// Empty when the spec is well formed; otherwise one message per violation.
std::vector<std::string> validate(const NetworkSpec& spec);

/// Throws ShapeError listing every violation.
void require_valid(const NetworkSpec& spec);

Tensor forward_message(const Connection& conn, const Shape& lower, const Shape& upper,
                       std::span<const double> g_below);

Tensor backward_message(const Connection& conn, const Shape& lower, const Shape& upper,
                        std::span<const double> g_above);

/// Gradient of <upper_vec, forward_message(conn, lower_vec)> with respect to
/// conn.weights (empty for AvgPool). By the adjoint identity it is also the
/// gradient of <backward_message(conn, upper_vec), lower_vec>.
Tensor weight_gradient(const Connection& conn, const Shape& lower, const Shape& upper,
                       std::span<const double> upper_vec, std::span<const double> lower_vec);

}  // namespace ham
