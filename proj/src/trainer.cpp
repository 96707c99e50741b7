#include "ham/trainer.hpp"
#include "ham/dynamics.hpp"
#include "ham/io.hpp"
#include "ham/rng.hpp"

#include <cmath>
#include <ostream>

namespace ham {

namespace {

constexpr std::size_t kFdWarnWeights = 10000;

void check_trainable(const NetworkSpec& spec, std::span<const Tensor> clean, const TrainConfig& cfg) {
  require_valid(spec);
  if (cfg.unroll_steps == 0) throw DomainError("unroll_steps must be >= 1");
  if (!(cfg.dt > 0.0)) throw DomainError("dt must be positive");
  if (clean.empty()) throw DomainError("empty training batch");
  for (const auto& l : spec.layers) {
    if (!(l.tau > 0.0)) throw DomainError("training needs every tau > 0 (layer '" + l.name + "')");
  }
  for (const auto& c : clean) require_size(c, spec.layers[0].shape, "training pattern");
}

NetworkState corrupted_start(const NetworkSpec& spec, std::span<const double> clean, const TrainConfig& cfg,
                             std::size_t index) {
  return cue_state(spec, corrupt(clean, cfg.noise.with_seed(mix_seed(cfg.noise.seed, index))));
}

NetworkState euler(const NetworkSpec& spec, const NetworkState& s, double dt) {
  const auto v = velocity(spec, s);
  NetworkState out = s;
  for (std::size_t a = 0; a < out.layers.size(); ++a) axpy(dt, v[a], out.layers[a]);
  out.t += dt;
  check_finite(spec, out);
  return out;
}

double pattern_loss(std::span<const double> x, std::span<const double> clean) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - clean[i]) * (x[i] - clean[i]);
  return acc / static_cast<double>(x.size());
}

// Adds the gradient of this pattern's loss (scaled by `weight`) into `grad`
// and returns the loss.
double backprop_pattern(const NetworkSpec& spec, std::span<const double> clean, const TrainConfig& cfg,
                        std::size_t index, double weight, std::vector<Tensor>& grad) {
  const std::size_t layers = spec.layers.size();
  std::vector<NetworkState> states;
  states.reserve(cfg.unroll_steps + 1);
  states.push_back(corrupted_start(spec, clean, cfg, index));
  for (std::size_t t = 0; t < cfg.unroll_steps; ++t) states.push_back(euler(spec, states.back(), cfg.dt));

  const Tensor& xT = states.back().layers[0];
  const double loss = pattern_loss(xT, clean);

  // adjoint of the final state
  std::vector<Tensor> lambda;
  for (const auto& l : spec.layers) lambda.emplace_back(l.shape.size(), 0.0);
  const double scale = 2.0 * weight / static_cast<double>(xT.size());
  for (std::size_t i = 0; i < xT.size(); ++i) lambda[0][i] = scale * (xT[i] - clean[i]);

  for (std::size_t t = cfg.unroll_steps; t-- > 0;) {
    const NetworkState& s = states[t];
    const auto g = layer_activations(spec, s);
    // mu^A = dt / tau_A * lambda^A is the adjoint of the drive into layer A
    std::vector<Tensor> mu(layers);
    std::vector<Tensor> gbar;
    for (std::size_t a = 0; a < layers; ++a) {
      mu[a] = lambda[a];
      for (double& v : mu[a]) v *= cfg.dt / spec.layers[a].tau;
      axpy(-1.0, mu[a], lambda[a]);
      gbar.emplace_back(spec.layers[a].shape.size(), 0.0);
    }
    for (std::size_t c = 0; c < spec.connections.size(); ++c) {
      const Shape& lo = spec.layers[c].shape;
      const Shape& up = spec.layers[c + 1].shape;
      axpy(1.0, spec.backward(c, mu[c + 1]), gbar[c]);
      axpy(1.0, spec.forward(c, mu[c]), gbar[c + 1]);
      const Connection& conn = spec.connections[c];
      if (conn.weight_count() == 0) continue;
      axpy(1.0, weight_gradient(conn, lo, up, mu[c + 1], g[c]), grad[c]);
      axpy(1.0, weight_gradient(conn, lo, up, g[c + 1], mu[c]), grad[c]);
    }
    for (std::size_t a = 0; a < layers; ++a) {
      const auto& l = spec.layers[a];
      axpy(1.0, hessian_vector_product(l.lagrangian, l.shape, s.layers[a], gbar[a]), lambda[a]);
    }
  }
  return loss;
}

std::vector<Tensor> zero_like(const NetworkSpec& spec) {
  std::vector<Tensor> out;
  for (const auto& c : spec.connections) out.emplace_back(c.weights.size(), 0.0);
  return out;
}

}  // namespace

double unroll_loss(const NetworkSpec& spec, std::span<const Tensor> clean, const TrainConfig& cfg) {
  check_trainable(spec, clean, cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    NetworkState s = corrupted_start(spec, clean[i], cfg, i);
    for (std::size_t t = 0; t < cfg.unroll_steps; ++t) s = euler(spec, s, cfg.dt);
    total += pattern_loss(s.layers[0], clean[i]);
  }
  return total / static_cast<double>(clean.size());
}

Gradient gradient(const NetworkSpec& spec, std::span<const Tensor> clean, const TrainConfig& cfg) {
  check_trainable(spec, clean, cfg);
  Gradient out;
  out.weights = zero_like(spec);

  if (cfg.gradient_mode == TrainConfig::GradientMode::Analytic) {
    const double w = 1.0 / static_cast<double>(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) {
      out.loss += w * backprop_pattern(spec, clean[i], cfg, i, w, out.weights);
    }
    return out;
  }

  std::size_t total = 0;
  for (const auto& c : spec.connections) total += c.weights.size();
  if (total > kFdWarnWeights) {
    out.warnings.push_back("finite-difference gradient over " + std::to_string(total) +
                           " weights; this needs " + std::to_string(2 * total) + " unrolls");
  }
  out.loss = unroll_loss(spec, clean, cfg);
  NetworkSpec probe = spec;
  const double h = cfg.fd_step;
  for (std::size_t c = 0; c < probe.connections.size(); ++c) {
    auto& w = probe.connections[c].weights;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + h;
      const double up = unroll_loss(probe, clean, cfg);
      w[i] = saved - h;
      const double down = unroll_loss(probe, clean, cfg);
      w[i] = saved;
      out.weights[c][i] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

TrainResult train(const NetworkSpec& spec, const PatternSet& corpus, const TrainConfig& cfg) {
  corpus.check();
  if (!(cfg.learning_rate >= 0.0)) throw DomainError("learning_rate must be >= 0");
  TrainResult result;
  result.spec = spec;
  double lr = cfg.learning_rate;
  const std::size_t n = corpus.size();
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    TrainConfig ecfg = cfg;
    if (!cfg.freeze_noise) ecfg.noise = cfg.noise.with_seed(mix_seed(cfg.noise.seed, epoch));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::span<const Tensor> clean(corpus.patterns.data() + start, std::min(batch, n - start));
      TrainConfig bcfg = ecfg;
      bcfg.noise = ecfg.noise.with_seed(mix_seed(ecfg.noise.seed, start));
      Gradient grad;
      try {
        grad = gradient(result.spec, clean, bcfg);
      } catch (const DomainError& e) {
        // a non-finite unroll is divergence too; keep the history
        result.warnings.push_back(e.what());
        grad.loss = INFINITY;
      }
      for (auto& w : grad.warnings) result.warnings.push_back(std::move(w));
      if (!std::isfinite(grad.loss) || grad.loss > cfg.divergence_limit) {
        result.loss_curve.push_back(grad.loss);
        result.diverged = true;
        result.final_learning_rate = lr;
        return result;
      }
      epoch_loss += grad.loss;
      ++batches;

      for (int attempt = 0;; ++attempt) {
        NetworkSpec next = result.spec;
        for (std::size_t c = 0; c < next.connections.size(); ++c) {
          axpy(-lr, grad.weights[c], next.connections[c].weights);
        }
        if (!cfg.backtracking || lr == 0.0 || attempt >= 30) {
          result.spec = std::move(next);
          break;
        }
        double trial = INFINITY;
        try {
          trial = unroll_loss(next, clean, bcfg);
        } catch (const DomainError&) {
          // a blown-up unroll counts as a loss increase
        }
        if (trial <= grad.loss) {
          result.spec = std::move(next);
          break;
        }
        lr *= 0.5;
      }
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
  }
  result.final_learning_rate = lr;
  return result;
}

void write_loss_csv(std::ostream& os, std::span<const double> curve) {
  os << "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) os << i << ',' << format_double(curve[i]) << '\n';
}

}  // namespace ham
