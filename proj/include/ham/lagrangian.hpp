#pragma once

#include "ham/tensor.hpp"

#include <span>
#include <string>

namespace ham {

/// Scalar function of a whole layer. Its gradient is the layer's activation
/// (the signal neurons send to neighbouring layers) and its Hessian must be
/// positive semi-definite for the network energy to be a Lyapunov function.
///
///   Quadratic            L = 1/2 sum x^2                       g = x
///   LogSumExp            L = 1/beta log sum_i exp(beta x_i)    g = softmax(beta x)
///   ChannelLogSumExp     L = sum over sites of LogSumExp taken over channels
///   ElementwiseAdditive  L = sum_i F(x_i)                      g = F'(x)
struct Lagrangian {
  enum class Kind { Quadratic, LogSumExp, ChannelLogSumExp, ElementwiseAdditive };
  enum class Function { Identity, LogCosh, Relu };

  Kind kind = Kind::Quadratic;
  double beta = 1.0;
  Function function = Function::Identity;

  static Lagrangian quadratic() { return {}; }
  static Lagrangian log_sum_exp(double beta) { return {Kind::LogSumExp, beta, Function::Identity}; }
  static Lagrangian channel_log_sum_exp(double beta) {
    return {Kind::ChannelLogSumExp, beta, Function::Identity};
  }
  static Lagrangian elementwise(Function f) { return {Kind::ElementwiseAdditive, 1.0, f}; }

  bool is_softmax() const { return kind == Kind::LogSumExp || kind == Kind::ChannelLogSumExp; }

  /// Throws DomainError when beta is not positive for softmax kinds.
  void check() const;

  std::string str() const;

  friend bool operator==(const Lagrangian&, const Lagrangian&) = default;
};

/// Normalization groups of a softmax-type Lagrangian on `shape`: returns the
/// group length; groups are contiguous. LogSumExp has one group spanning the
/// layer, ChannelLogSumExp one group per spatial site.
std::size_t softmax_group_size(const Lagrangian& lag, const Shape& shape);

double value(const Lagrangian& lag, const Shape& shape, std::span<const double> x);

Tensor activations(const Lagrangian& lag, const Shape& shape, std::span<const double> x);

/// v^T (d^2 L / dx dx) v from the analytic Hessian.
double hessian_quadratic_form(const Lagrangian& lag, const Shape& shape, std::span<const double> x,
                              std::span<const double> v);

/// (d^2 L / dx dx) v. The Hessian is the Jacobian of the activations, so this
/// is also the tangent map used when differentiating through a layer.
Tensor hessian_vector_product(const Lagrangian& lag, const Shape& shape, std::span<const double> x,
                              std::span<const double> v);

/// Legendre term sum_i x_i g_i - L(x), the layer's contribution to the energy.
double legendre(const Lagrangian& lag, const Shape& shape, std::span<const double> x);

}  // namespace ham
