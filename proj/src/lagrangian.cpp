#include "ham/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ham {

namespace {

struct ElementwiseDerivs {
  double f0, f1, f2;
};

ElementwiseDerivs elementwise(Lagrangian::Function fn, double x) {
  switch (fn) {
    case Lagrangian::Function::Identity:
      return {0.5 * x * x, x, 1.0};
    case Lagrangian::Function::LogCosh: {
      const double a = std::abs(x);
      const double t = std::tanh(x);
      return {a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2, t, 1.0 - t * t};
    }
    case Lagrangian::Function::Relu: {
      // F'' at the kink is taken as 0.
      const double r = std::max(x, 0.0);
      return {0.5 * r * r, r, x > 0.0 ? 1.0 : 0.0};
    }
  }
  return {0.0, 0.0, 0.0};
}

// Writes softmax(beta * x) into f and returns the log-sum-exp value
// (1/beta) log sum exp(beta x) of this group.
double softmax_group(double beta, std::span<const double> x, std::span<double> f) {
  double m = -INFINITY;
  for (double v : x) m = std::max(m, beta * v);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    f[i] = std::exp(beta * x[i] - m);
    s += f[i];
  }
  for (double& v : f) v /= s;
  return (m + std::log(s)) / beta;
}

template <typename Fn>
void for_each_group(const Lagrangian& lag, const Shape& shape, Fn&& fn) {
  const std::size_t g = softmax_group_size(lag, shape);
  for (std::size_t start = 0; start < shape.size(); start += g) fn(start, g);
}

}  // namespace

void Lagrangian::check() const {
  if (is_softmax() && !(beta > 0.0 && std::isfinite(beta))) {
    throw DomainError("lagrangian " + str() + ": beta must be positive and finite");
  }
}

std::string Lagrangian::str() const {
  switch (kind) {
    case Kind::Quadratic:
      return "quadratic";
    case Kind::LogSumExp:
      return "logsumexp(beta=" + std::to_string(beta) + ")";
    case Kind::ChannelLogSumExp:
      return "channel_logsumexp(beta=" + std::to_string(beta) + ")";
    case Kind::ElementwiseAdditive:
      switch (function) {
        case Function::Identity:
          return "elementwise(identity)";
        case Function::LogCosh:
          return "elementwise(logcosh)";
        case Function::Relu:
          return "elementwise(relu)";
      }
  }
  return "unknown";
}

std::size_t softmax_group_size(const Lagrangian& lag, const Shape& shape) {
  if (lag.kind == Lagrangian::Kind::ChannelLogSumExp) return shape.channels;
  return shape.size();
}

double value(const Lagrangian& lag, const Shape& shape, std::span<const double> x) {
  require_size(x, shape, "lagrangian value");
  lag.check();
  double acc = 0.0;
  switch (lag.kind) {
    case Lagrangian::Kind::Quadratic:
      return 0.5 * dot(x, x);
    case Lagrangian::Kind::ElementwiseAdditive:
      for (double v : x) acc += elementwise(lag.function, v).f0;
      return acc;
    case Lagrangian::Kind::LogSumExp:
    case Lagrangian::Kind::ChannelLogSumExp: {
      Tensor scratch(x.size());
      for_each_group(lag, shape, [&](std::size_t start, std::size_t n) {
        acc += softmax_group(lag.beta, x.subspan(start, n), std::span(scratch).subspan(start, n));
      });
      return acc;
    }
  }
  return acc;
}

Tensor activations(const Lagrangian& lag, const Shape& shape, std::span<const double> x) {
  require_size(x, shape, "lagrangian activations");
  lag.check();
  Tensor g(x.size());
  switch (lag.kind) {
    case Lagrangian::Kind::Quadratic:
      std::copy(x.begin(), x.end(), g.begin());
      break;
    case Lagrangian::Kind::ElementwiseAdditive:
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = elementwise(lag.function, x[i]).f1;
      break;
    case Lagrangian::Kind::LogSumExp:
    case Lagrangian::Kind::ChannelLogSumExp:
      for_each_group(lag, shape, [&](std::size_t start, std::size_t n) {
        softmax_group(lag.beta, x.subspan(start, n), std::span(g).subspan(start, n));
      });
      break;
  }
  return g;
}

Tensor hessian_vector_product(const Lagrangian& lag, const Shape& shape, std::span<const double> x,
                              std::span<const double> v) {
  require_size(x, shape, "hessian x");
  require_size(v, shape, "hessian direction");
  lag.check();
  Tensor hv(x.size());
  switch (lag.kind) {
    case Lagrangian::Kind::Quadratic:
      std::copy(v.begin(), v.end(), hv.begin());
      break;
    case Lagrangian::Kind::ElementwiseAdditive:
      for (std::size_t i = 0; i < x.size(); ++i) hv[i] = elementwise(lag.function, x[i]).f2 * v[i];
      break;
    case Lagrangian::Kind::LogSumExp:
    case Lagrangian::Kind::ChannelLogSumExp: {
      // beta (diag(f) - f f^T) v, group by group
      Tensor f(x.size());
      for_each_group(lag, shape, [&](std::size_t start, std::size_t n) {
        auto fs = std::span(f).subspan(start, n);
        softmax_group(lag.beta, x.subspan(start, n), fs);
        const double fv = dot(fs, v.subspan(start, n));
        for (std::size_t i = 0; i < n; ++i) {
          hv[start + i] = lag.beta * fs[i] * (v[start + i] - fv);
        }
      });
      break;
    }
  }
  return hv;
}

double hessian_quadratic_form(const Lagrangian& lag, const Shape& shape, std::span<const double> x,
                              std::span<const double> v) {
  if (lag.is_softmax()) {
    // beta * (sum f v^2 - (sum f v)^2) per group, which is a variance and so
    // evaluated in centered form to stay non-negative under round-off.
    require_size(x, shape, "hessian x");
    require_size(v, shape, "hessian direction");
    lag.check();
    Tensor f(x.size());
    double acc = 0.0;
    for_each_group(lag, shape, [&](std::size_t start, std::size_t n) {
      auto fs = std::span(f).subspan(start, n);
      softmax_group(lag.beta, x.subspan(start, n), fs);
      const double mean = dot(fs, v.subspan(start, n));
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = v[start + i] - mean;
        var += fs[i] * d * d;
      }
      acc += lag.beta * var;
    });
    return acc;
  }
  const Tensor hv = hessian_vector_product(lag, shape, x, v);
  return dot(v, hv);
}

double legendre(const Lagrangian& lag, const Shape& shape, std::span<const double> x) {
  const Tensor g = activations(lag, shape, x);
  return dot(x, g) - value(lag, shape, x);
}

}  // namespace ham
