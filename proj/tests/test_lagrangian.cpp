#include "doctest.h"

#include "ham/lagrangian.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>

using namespace ham;
using ham::testing::fd_directional;
using ham::testing::fd_gradient;
using ham::testing::random_tensor;

namespace {

struct Case {
  Lagrangian lag;
  Shape shape;
};

Case random_case(Rng& rng) {
  const Shape map = Shape::map(1 + rng.below(3), 1 + rng.below(3), 1 + rng.below(4));
  const Shape flat = Shape::flat(1 + rng.below(8));
  const double beta = 0.2 + 4.0 * rng.uniform();
  switch (rng.below(6)) {
    case 0:
      return {Lagrangian::quadratic(), flat};
    case 1:
      return {Lagrangian::log_sum_exp(beta), rng.below(2) ? flat : map};
    case 2:
      return {Lagrangian::channel_log_sum_exp(beta), map};
    case 3:
      return {Lagrangian::elementwise(Lagrangian::Function::Identity), map};
    case 4:
      return {Lagrangian::elementwise(Lagrangian::Function::LogCosh), flat};
    default:
      return {Lagrangian::elementwise(Lagrangian::Function::Relu), map};
  }
}

}  // namespace

TEST_CASE("lagrangian values") {
  const Tensor x{3.0, 4.0};
  CHECK(value(Lagrangian::quadratic(), Shape::flat(2), x) == doctest::Approx(12.5).epsilon(1e-15));
  CHECK(value(Lagrangian::log_sum_exp(1.0), Shape::flat(2), Tensor{0.0, 0.0}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // 0.5 * ln(e^2 + 1), evaluated with mpmath at 30 digits
  CHECK(value(Lagrangian::log_sum_exp(2.0), Shape::flat(2), Tensor{1.0, 0.0}) ==
        doctest::Approx(1.0634640055214862).epsilon(1e-14));
}

TEST_CASE("lagrangian value survives large inputs") {
  const double v = value(Lagrangian::log_sum_exp(10.0), Shape::flat(3), Tensor{1000.0, 999.0, -5.0});
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(1000.0 + std::log1p(std::exp(-10.0)) / 10.0).epsilon(1e-14));
  const Tensor g = activations(Lagrangian::log_sum_exp(10.0), Shape::flat(3), Tensor{1000.0, 999.0, -5.0});
  CHECK(std::isfinite(g[0]));
  CHECK(g[2] == 0.0);
}

TEST_CASE("activations") {
  CHECK(activations(Lagrangian::quadratic(), Shape::flat(2), Tensor{3.0, 4.0}) == Tensor{3.0, 4.0});
  for (double beta : {0.1, 1.0, 7.0}) {
    const Tensor g = activations(Lagrangian::log_sum_exp(beta), Shape::flat(4), Tensor{2.5, 2.5, 2.5, 2.5});
    for (double v : g) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  }
  const Tensor g = activations(Lagrangian::channel_log_sum_exp(1.0), Shape::map(1, 1, 2), Tensor{0.0, 0.0});
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.5));
}

TEST_CASE("channel softmax normalizes every site independently") {
  Rng rng(3);
  const Shape s = Shape::map(3, 2, 4);
  const Tensor x = random_tensor(rng, s.size(), 3.0);
  const Tensor g = activations(Lagrangian::channel_log_sum_exp(1.7), s, x);
  for (std::size_t site = 0; site < s.sites(); ++site) {
    const double sum = std::accumulate(g.begin() + site * 4, g.begin() + site * 4 + 4, 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("hessian quadratic form examples") {
  CHECK(hessian_quadratic_form(Lagrangian::quadratic(), Shape::flat(2), Tensor{-7.0, 0.3}, Tensor{1.0, 2.0}) ==
        doctest::Approx(5.0));
  CHECK(hessian_quadratic_form(Lagrangian::log_sum_exp(1.0), Shape::flat(2), Tensor{0.0, 0.0}, Tensor{1.0, -1.0}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const Tensor x = random_tensor(rng, 5, 2.0);
    const double c = rng.gaussian();
    CHECK(std::abs(hessian_quadratic_form(Lagrangian::log_sum_exp(0.3 + i), Shape::flat(5), x, Tensor(5, c))) <
          1e-15);
  }
}

TEST_CASE("relu hessian uses the zero subgradient at the kink") {
  const auto lag = Lagrangian::elementwise(Lagrangian::Function::Relu);
  CHECK(hessian_quadratic_form(lag, Shape::flat(3), Tensor{0.0, 1.0, -1.0}, Tensor{1.0, 1.0, 1.0}) == 1.0);
}

TEST_CASE("shape mismatch is a structured error") {
  CHECK_THROWS_AS(value(Lagrangian::quadratic(), Shape::flat(3), Tensor{1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(activations(Lagrangian::log_sum_exp(1.0), Shape::map(2, 2, 1), Tensor(3)), ShapeError);
  CHECK_THROWS_AS(hessian_quadratic_form(Lagrangian::quadratic(), Shape::flat(2), Tensor(2), Tensor(3)), ShapeError);
  CHECK_THROWS_AS(value(Lagrangian::log_sum_exp(0.0), Shape::flat(2), Tensor(2)), DomainError);
  CHECK_THROWS_AS(value(Lagrangian::log_sum_exp(-1.0), Shape::flat(2), Tensor(2)), DomainError);
}

TEST_CASE("property: activations are the gradient of the value") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng);
    Tensor x = random_tensor(rng, c.shape.size(), 2.0);
    if (c.lag.kind == Lagrangian::Kind::ElementwiseAdditive && c.lag.function == Lagrangian::Function::Relu) {
      for (double& v : x) {
        if (std::abs(v) < 0.05) v = 0.5;  // keep the FD stencil off the kink
      }
    }
    const Tensor g = activations(c.lag, c.shape, x);
    const Tensor fd = fd_gradient([&](const Tensor& y) { return value(c.lag, c.shape, y); }, x);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(g[i] - fd[i]));
    CHECK_MESSAGE(err / (1.0 + max_abs(g)) < 1e-6, c.lag.str(), " err=", err);
  }
}

TEST_CASE("property: hessian forms match directional derivatives of the activations") {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Case c = random_case(rng);
    Tensor x = random_tensor(rng, c.shape.size(), 2.0);
    for (double& v : x) {
      if (std::abs(v) < 0.05) v = -0.7;  // the stencil reaches 2h |v_i| from x
    }
    const Tensor v = random_tensor(rng, c.shape.size());
    const double q = hessian_quadratic_form(c.lag, c.shape, x, v);
    const double fd = fd_directional([&](const Tensor& y) { return activations(c.lag, c.shape, y); }, x, v);
    CHECK_MESSAGE(std::abs(q - fd) / (1.0 + std::abs(q)) < 1e-6, c.lag.str());
    const Tensor hv = hessian_vector_product(c.lag, c.shape, x, v);
    CHECK(std::abs(dot(v, hv) - q) <= 1e-12 * (1.0 + std::abs(q)));
  }
}

TEST_CASE("property: hessians are positive semi-definite") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const Case c = random_case(rng);
    const Tensor x = random_tensor(rng, c.shape.size(), 5.0);
    const Tensor v = random_tensor(rng, c.shape.size(), 3.0);
    CHECK(hessian_quadratic_form(c.lag, c.shape, x, v) >= -1e-12 * dot(v, v));
  }
}

TEST_CASE("property: log-sum-exp shift invariance and normalization") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const bool channel = trial % 2 == 1;
    const Shape s = channel ? Shape::map(2, 2, 3) : Shape::flat(6);
    const Lagrangian lag = channel ? Lagrangian::channel_log_sum_exp(0.5 + rng.uniform() * 3)
                                   : Lagrangian::log_sum_exp(0.5 + rng.uniform() * 3);
    const Tensor x = random_tensor(rng, s.size(), 2.0);
    const double c = rng.gaussian() * 3.0;
    Tensor shifted = x;
    for (double& v : shifted) v += c;
    const double groups = static_cast<double>(s.size() / softmax_group_size(lag, s));
    CHECK(std::abs(value(lag, s, shifted) - (value(lag, s, x) + groups * c)) < 1e-12);
    const Tensor g0 = activations(lag, s, x), g1 = activations(lag, s, shifted);
    for (std::size_t i = 0; i < g0.size(); ++i) CHECK(std::abs(g0[i] - g1[i]) < 1e-12);
    CHECK(std::abs(std::accumulate(g0.begin(), g0.end(), 0.0) - groups) < 1e-12);
  }
}

TEST_CASE("legendre term of quadratic equals the value") {
  CHECK(legendre(Lagrangian::quadratic(), Shape::flat(2), Tensor{3.0, 4.0}) == doctest::Approx(12.5));
}
