#include "ham/topology.hpp"

#include <cmath>
#include <sstream>

namespace ham {

Connection Connection::dense(std::size_t lower, std::size_t rows, std::size_t cols, Tensor weights) {
  Connection c;
  c.kind = Kind::Dense;
  c.lower = lower;
  c.rows = rows;
  c.cols = cols;
  c.weights = std::move(weights);
  return c;
}

Connection Connection::conv(std::size_t lower, std::size_t window, std::size_t in_channels,
                            std::size_t out_channels, std::size_t stride, Tensor kernel) {
  Connection c;
  c.kind = Kind::Conv;
  c.lower = lower;
  c.window = window;
  c.stride = stride;
  c.in_channels = in_channels;
  c.out_channels = out_channels;
  c.weights = std::move(kernel);
  return c;
}

Connection Connection::avg_pool(std::size_t lower, std::size_t window) {
  Connection c;
  c.kind = Kind::AvgPool;
  c.lower = lower;
  c.window = window;
  c.stride = window;
  return c;
}

std::size_t Connection::weight_count() const {
  switch (kind) {
    case Kind::Dense:
      return rows * cols;
    case Kind::Conv:
      return window * window * in_channels * out_channels;
    case Kind::AvgPool:
      return 0;
  }
  return 0;
}

std::string Connection::str() const {
  std::ostringstream os;
  os << "connection " << lower + 1 << "->" << lower + 2 << " ";
  switch (kind) {
    case Kind::Dense:
      os << "dense[" << rows << "x" << cols << "]";
      break;
    case Kind::Conv:
      os << "conv[w=" << window << ",s=" << stride << "," << in_channels << "->" << out_channels
         << "]";
      break;
    case Kind::AvgPool:
      os << "avgpool[p=" << window << "]";
      break;
  }
  return os.str();
}

std::size_t feature_map_extent(std::size_t extent, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) throw DomainError("feature_map_extent: window and stride must be >= 1");
  if (window > extent) {
    throw DomainError("feature_map_extent: window " + std::to_string(window) +
                      " exceeds input extent " + std::to_string(extent));
  }
  return (extent - window) / stride + 1;
}

namespace {

std::string layer_label(const NetworkSpec& spec, std::size_t i) {
  std::string label = "layer " + std::to_string(i + 1);
  if (i < spec.layers.size() && !spec.layers[i].name.empty()) label += " '" + spec.layers[i].name + "'";
  return label;
}

void check_connection(const NetworkSpec& spec, std::size_t index, const Connection& c,
                      std::vector<std::string>& out) {
  const std::string who = c.str();
  if (c.lower + 1 >= spec.layers.size()) {
    out.push_back(who + ": refers to a layer outside the stack");
    return;
  }
  if (c.lower != index) {
    out.push_back(who + ": connections must link consecutive layers in order (expected " +
                  std::to_string(index + 1) + "->" + std::to_string(index + 2) + ")");
    return;
  }
  const Shape& lo = spec.layers[c.lower].shape;
  const Shape& up = spec.layers[c.lower + 1].shape;
  for (double w : c.weights) {
    if (!std::isfinite(w)) {
      out.push_back(who + ": non-finite weight");
      break;
    }
  }
  if (c.weights.size() != c.weight_count()) {
    out.push_back(who + ": weight tensor has " + std::to_string(c.weights.size()) +
                  " values, expected " + std::to_string(c.weight_count()));
  }
  switch (c.kind) {
    case Connection::Kind::Dense:
      if (c.rows != up.size()) {
        out.push_back(who + ": rows " + std::to_string(c.rows) + " do not match upper layer size " +
                      std::to_string(up.size()));
      }
      if (c.cols != lo.size()) {
        out.push_back(who + ": cols " + std::to_string(c.cols) + " do not match lower layer size " +
                      std::to_string(lo.size()));
      }
      return;
    case Connection::Kind::Conv:
    case Connection::Kind::AvgPool: {
      const bool conv = c.kind == Connection::Kind::Conv;
      if (!lo.is_map() || !up.is_map()) {
        out.push_back(who + ": both endpoint layers must be map shaped");
        return;
      }
      if (c.window == 0 || c.stride == 0) {
        out.push_back(who + ": window and stride must be >= 1");
        return;
      }
      if (!conv && c.stride != c.window) {
        out.push_back(who + ": pooling stride must equal its window");
      }
      if (c.window > lo.height || c.window > lo.width) {
        out.push_back(who + ": window " + std::to_string(c.window) + " exceeds lower map " + lo.str());
        return;
      }
      const std::size_t eh = feature_map_extent(lo.height, c.window, c.stride);
      const std::size_t ew = feature_map_extent(lo.width, c.window, c.stride);
      if (up.height != eh) {
        out.push_back(who + ": upper layer height " + std::to_string(up.height) + ", expected " +
                      std::to_string(eh));
      }
      if (up.width != ew) {
        out.push_back(who + ": upper layer width " + std::to_string(up.width) + ", expected " +
                      std::to_string(ew));
      }
      const std::size_t cin = conv ? c.in_channels : up.channels;
      const std::size_t cout = conv ? c.out_channels : lo.channels;
      if (lo.channels != cin) {
        out.push_back(who + ": lower layer has " + std::to_string(lo.channels) + " channels, expected " +
                      std::to_string(cin));
      }
      if (up.channels != cout) {
        out.push_back(who + ": upper layer has " + std::to_string(up.channels) + " channels, expected " +
                      std::to_string(cout));
      }
      return;
    }
  }
}

}  // namespace

std::vector<std::string> validate(const NetworkSpec& spec) {
  std::vector<std::string> out;
  if (spec.layers.empty()) {
    out.emplace_back("network has no layers");
    return out;
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string who = layer_label(spec, i);
    if (l.shape.size() == 0) out.push_back(who + ": shape " + l.shape.str() + " has no neurons");
    if (!l.shape.is_map() && (l.shape.height != 1 || l.shape.width != 1)) {
      out.push_back(who + ": flat shape must have unit height and width");
    }
    if (!(l.tau >= 0.0) || !std::isfinite(l.tau)) {
      out.push_back(who + ": tau must be finite and >= 0");
    } else if (l.tau == 0.0 && i + 1 != spec.layers.size()) {
      out.push_back(who + ": tau = 0 is only allowed on the top layer");
    }
    if (l.lagrangian.is_softmax() && !(l.lagrangian.beta > 0.0 && std::isfinite(l.lagrangian.beta))) {
      out.push_back(who + ": beta must be positive");
    }
  }
  for (std::size_t i = 0; i < spec.connections.size(); ++i) {
    check_connection(spec, i, spec.connections[i], out);
  }
  for (std::size_t i = spec.connections.size(); i + 1 < spec.layers.size(); ++i) {
    out.push_back("missing connection " + std::to_string(i + 1) + "->" + std::to_string(i + 2));
  }
  return out;
}

void require_valid(const NetworkSpec& spec) {
  const auto v = validate(spec);
  if (v.empty()) return;
  std::string msg = "invalid network:";
  for (const auto& s : v) msg += "\n  " + s;
  throw ShapeError(msg);
}

Tensor forward_message(const Connection& c, const Shape& lo, const Shape& up,
                       std::span<const double> g) {
  require_size(g, lo, c.str() + " forward input");
  Tensor out(up.size(), 0.0);
  switch (c.kind) {
    case Connection::Kind::Dense:
      for (std::size_t r = 0; r < c.rows; ++r) {
        out[r] = dot(std::span(c.weights).subspan(r * c.cols, c.cols), g);
      }
      break;
    case Connection::Kind::Conv: {
      const std::size_t w = c.window, cin = c.in_channels, cout = c.out_channels;
      for (std::size_t oy = 0; oy < up.height; ++oy) {
        for (std::size_t ox = 0; ox < up.width; ++ox) {
          double* o = &out[up.index(oy, ox, 0)];
          for (std::size_t ky = 0; ky < w; ++ky) {
            for (std::size_t kx = 0; kx < w; ++kx) {
              const double* in = &g[lo.index(oy * c.stride + ky, ox * c.stride + kx, 0)];
              const double* k = &c.weights[(ky * w + kx) * cin * cout];
              for (std::size_t ci = 0; ci < cin; ++ci) {
                for (std::size_t co = 0; co < cout; ++co) o[co] += in[ci] * k[ci * cout + co];
              }
            }
          }
        }
      }
      break;
    }
    case Connection::Kind::AvgPool: {
      const std::size_t p = c.window;
      const double scale = 1.0 / static_cast<double>(p * p);
      for (std::size_t oy = 0; oy < up.height; ++oy) {
        for (std::size_t ox = 0; ox < up.width; ++ox) {
          for (std::size_t ky = 0; ky < p; ++ky) {
            for (std::size_t kx = 0; kx < p; ++kx) {
              for (std::size_t ch = 0; ch < up.channels; ++ch) {
                out[up.index(oy, ox, ch)] += scale * g[lo.index(oy * p + ky, ox * p + kx, ch)];
              }
            }
          }
        }
      }
      break;
    }
  }
  return out;
}

Tensor backward_message(const Connection& c, const Shape& lo, const Shape& up,
                        std::span<const double> g) {
  require_size(g, up, c.str() + " backward input");
  Tensor out(lo.size(), 0.0);
  switch (c.kind) {
    case Connection::Kind::Dense:
      for (std::size_t r = 0; r < c.rows; ++r) {
        axpy(g[r], std::span(c.weights).subspan(r * c.cols, c.cols), out);
      }
      break;
    case Connection::Kind::Conv: {
      const std::size_t w = c.window, cin = c.in_channels, cout = c.out_channels;
      for (std::size_t oy = 0; oy < up.height; ++oy) {
        for (std::size_t ox = 0; ox < up.width; ++ox) {
          const double* o = &g[up.index(oy, ox, 0)];
          for (std::size_t ky = 0; ky < w; ++ky) {
            for (std::size_t kx = 0; kx < w; ++kx) {
              double* in = &out[lo.index(oy * c.stride + ky, ox * c.stride + kx, 0)];
              const double* k = &c.weights[(ky * w + kx) * cin * cout];
              for (std::size_t ci = 0; ci < cin; ++ci) {
                double acc = 0.0;
                for (std::size_t co = 0; co < cout; ++co) acc += o[co] * k[ci * cout + co];
                in[ci] += acc;
              }
            }
          }
        }
      }
      break;
    }
    case Connection::Kind::AvgPool: {
      const std::size_t p = c.window;
      const double scale = 1.0 / static_cast<double>(p * p);
      for (std::size_t oy = 0; oy < up.height; ++oy) {
        for (std::size_t ox = 0; ox < up.width; ++ox) {
          for (std::size_t ky = 0; ky < p; ++ky) {
            for (std::size_t kx = 0; kx < p; ++kx) {
              for (std::size_t ch = 0; ch < up.channels; ++ch) {
                out[lo.index(oy * p + ky, ox * p + kx, ch)] += scale * g[up.index(oy, ox, ch)];
              }
            }
          }
        }
      }
      break;
    }
  }
  return out;
}

Tensor weight_gradient(const Connection& c, const Shape& lo, const Shape& up,
                       std::span<const double> a, std::span<const double> b) {
  require_size(a, up, c.str() + " weight gradient (upper)");
  require_size(b, lo, c.str() + " weight gradient (lower)");
  Tensor grad(c.weight_count(), 0.0);
  switch (c.kind) {
    case Connection::Kind::Dense:
      for (std::size_t r = 0; r < c.rows; ++r) {
        axpy(a[r], b, std::span(grad).subspan(r * c.cols, c.cols));
      }
      break;
    case Connection::Kind::Conv: {
      const std::size_t w = c.window, cin = c.in_channels, cout = c.out_channels;
      for (std::size_t oy = 0; oy < up.height; ++oy) {
        for (std::size_t ox = 0; ox < up.width; ++ox) {
          const double* o = &a[up.index(oy, ox, 0)];
          for (std::size_t ky = 0; ky < w; ++ky) {
            for (std::size_t kx = 0; kx < w; ++kx) {
              const double* in = &b[lo.index(oy * c.stride + ky, ox * c.stride + kx, 0)];
              double* k = &grad[(ky * w + kx) * cin * cout];
              for (std::size_t ci = 0; ci < cin; ++ci) {
                for (std::size_t co = 0; co < cout; ++co) k[ci * cout + co] += in[ci] * o[co];
              }
            }
          }
        }
      }
      break;
    }
    case Connection::Kind::AvgPool:
      break;
  }
  return grad;
}

Tensor NetworkSpec::forward(std::size_t c, std::span<const double> g_below) const {
  const Connection& conn = connections.at(c);
  return forward_message(conn, layers.at(c).shape, layers.at(c + 1).shape, g_below);
}

Tensor NetworkSpec::backward(std::size_t c, std::span<const double> g_above) const {
  const Connection& conn = connections.at(c);
  return backward_message(conn, layers.at(c).shape, layers.at(c + 1).shape, g_above);
}

}  // namespace ham
