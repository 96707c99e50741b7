#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ham {

/// Activity, activation and drive tensors are flat row-major buffers. Map
/// shaped layers use (row, column, channel) order with the channel fastest.
using Tensor = std::vector<double>;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor size or layout does not match what a layer/connection expects.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Numerical failure (NaN/Inf, divergence) or a violated precondition of an
/// operation on otherwise well-formed inputs.
class DomainError : public Error {
public:
  using Error::Error;
};

struct Shape {
  enum class Kind { Flat, Map };

  Kind kind = Kind::Flat;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;

  static Shape flat(std::size_t n) { return {Kind::Flat, 1, 1, n}; }
  static Shape map(std::size_t h, std::size_t w, std::size_t c) { return {Kind::Map, h, w, c}; }

  bool is_map() const { return kind == Kind::Map; }
  std::size_t size() const { return height * width * channels; }
  /// Number of spatial sites; a flat layer is a single site.
  std::size_t sites() const { return height * width; }

  std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const {
    return (row * width + col) * channels + ch;
  }

  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string Shape::str() const {
  if (!is_map()) return "flat(" + std::to_string(channels) + ")";
  return "map(" + std::to_string(height) + "," + std::to_string(width) + "," +
         std::to_string(channels) + ")";
}

inline void require_size(std::span<const double> t, const Shape& s, const std::string& what) {
  if (t.size() != s.size()) {
    throw ShapeError(what + ": expected shape " + s.str() + " (" + std::to_string(s.size()) +
                     " values), got " + std::to_string(t.size()));
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a);
double max_abs(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace ham
