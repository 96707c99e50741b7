#include "ham/memory.hpp"
#include "ham/io.hpp"
#include "ham/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ham {

void PatternSet::check() const {
  if (patterns.empty()) throw DomainError("pattern set is empty");
  for (const auto& p : patterns) {
    if (p.size() != patterns.front().size()) throw DomainError("patterns differ in length");
    if (p.empty()) throw DomainError("patterns must be non-empty");
  }
}

PatternSet random_binary_patterns(std::size_t k, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PatternSet set;
  set.patterns.assign(k, Tensor(n));
  for (auto& p : set.patterns) {
    for (double& v : p) v = rng.sign();
  }
  return set;
}

void NoiseModel::check() const {
  switch (kind) {
    case Kind::None:
      return;
    case Kind::BitFlip:
    case Kind::Mask:
      if (!(level >= 0.0 && level <= 1.0)) throw DomainError("noise rate/fraction must lie in [0, 1]");
      return;
    case Kind::GaussianAdditive:
      if (!(level >= 0.0) || !std::isfinite(level)) throw DomainError("noise sigma must be >= 0");
      return;
  }
}

Tensor corrupt(std::span<const double> pattern, const NoiseModel& model) {
  model.check();
  Tensor out(pattern.begin(), pattern.end());
  Rng rng(model.seed);
  const auto count = static_cast<std::size_t>(std::llround(model.level * static_cast<double>(out.size())));
  switch (model.kind) {
    case NoiseModel::Kind::None:
      break;
    case NoiseModel::Kind::BitFlip:
      for (double v : out) {
        if (v != 1.0 && v != -1.0) throw DomainError("bit-flip noise requires a +-1 pattern");
      }
      for (std::size_t i : rng.choose(out.size(), count)) out[i] = -out[i];
      break;
    case NoiseModel::Kind::Mask:
      for (std::size_t i : rng.choose(out.size(), count)) out[i] = 0.0;
      break;
    case NoiseModel::Kind::GaussianAdditive:
      for (double& v : out) v += model.level * rng.gaussian();
      break;
  }
  return out;
}

StoredNetwork store_single_hidden(const PatternSet& patterns, double beta, const StoreOptions& opts) {
  patterns.check();
  const std::size_t k = patterns.size();
  const std::size_t n = patterns.patterns.front().size();

  StoredNetwork out;
  out.spec.layers.push_back({"input", Shape::flat(n), Lagrangian::quadratic(), opts.tau_input});
  out.spec.layers.push_back({"hidden", Shape::flat(k), Lagrangian::log_sum_exp(beta), opts.tau_hidden});
  Tensor w;
  w.reserve(k * n);
  for (const auto& p : patterns.patterns) w.insert(w.end(), p.begin(), p.end());
  out.spec.connections.push_back(Connection::dense(0, k, n, std::move(w)));
  require_valid(out.spec);

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (patterns.patterns[a] == patterns.patterns[b]) {
        out.warnings.push_back("patterns " + std::to_string(a) + " and " + std::to_string(b) +
                               " are identical and share one attractor");
      }
    }
  }
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

bool RecallReport::success() const { return binary_reference ? bit_error == 0 : overlap >= 0.99; }

const char* RecallReport::csv_header() {
  return "overlap,bit_error,converged,steps,energy_initial,energy_final";
}

std::string RecallReport::csv_row() const {
  std::ostringstream os;
  os << format_double(overlap) << ',' << bit_error << ',' << (converged ? 1 : 0) << ',' << steps << ','
     << format_double(energy_initial) << ',' << format_double(energy_final);
  return os.str();
}

Retrieval retrieve(const NetworkSpec& spec, std::span<const double> cue, const IntegratorConfig& cfg,
                   std::optional<std::span<const double>> reference) {
  const NetworkState init = cue_state(spec, cue);
  const std::span<const double> ref = reference.value_or(cue);
  require_size(ref, spec.layers[0].shape, "retrieval reference");

  Relaxation r = relax(spec, init, cfg);
  Retrieval out;
  out.retrieved = r.state.layers[0];
  out.report.converged = r.converged;
  out.report.steps = r.steps;
  out.report.energy_initial = r.trace.rows.front().energy;
  out.report.energy_final = r.trace.rows.back().energy;
  out.report.overlap = cosine_similarity(out.retrieved, ref);
  out.report.binary_reference = std::all_of(ref.begin(), ref.end(), [](double v) { return v == 1.0 || v == -1.0; });
  if (out.report.binary_reference) {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (!(out.retrieved[i] * ref[i] > 0.0)) ++out.report.bit_error;
    }
  }
  out.final_state = std::move(r.state);
  return out;
}

std::vector<CapacityRow> capacity_sweep(const CapacityConfig& cfg) {
  if (cfg.trials == 0) throw DomainError("capacity sweep needs at least one trial");
  cfg.noise.check();
  std::vector<CapacityRow> rows;
  for (std::size_t k : cfg.k_list) {
    if (k == 0) throw DomainError("capacity sweep: K must be >= 1");
    for (double beta : cfg.beta_list) {
      std::size_t successes = 0, steps = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::uint64_t trial_seed = mix_seed(mix_seed(cfg.seed, k), t);
        const PatternSet set = random_binary_patterns(k, cfg.input_size, trial_seed);
        const std::size_t probe = Rng(mix_seed(trial_seed, 1)).below(k);
        const Tensor cue = corrupt(set.patterns[probe], cfg.noise.with_seed(mix_seed(trial_seed, 2)));
        const StoredNetwork net = store_single_hidden(set, beta, cfg.store);
        const Retrieval r = retrieve(net.spec, cue, cfg.integrator, std::span<const double>(set.patterns[probe]));
        successes += r.report.success() ? 1 : 0;
        steps += r.report.steps;
      }
      const double n = static_cast<double>(cfg.trials);
      rows.push_back({k, beta, cfg.trials, static_cast<double>(successes) / n, static_cast<double>(steps) / n});
    }
  }
  return rows;
}

void write_capacity_csv(std::ostream& os, const std::vector<CapacityRow>& rows) {
  os << "K,beta,trials,success_rate,mean_steps\n";
  for (const auto& r : rows) {
    os << r.k << ',' << format_double(r.beta) << ',' << r.trials << ',' << format_double(r.success_rate)
       << ',' << format_double(r.mean_steps) << '\n';
  }
}

AssemblyOptions AssemblyOptions::two_layouts() {
  AssemblyOptions o;
  o.patches = {{1.0, -1.0, -1.0, 1.0}, {1.0, 1.0, -1.0, -1.0}};
  o.layouts = {{0, 1, 1, 0}, {1, 1, 0, 0}};
  return o;
}

AssemblyDemo build_assembly_demo(const AssemblyOptions& opts) {
  const std::size_t w = opts.patch_size;
  const std::size_t side = opts.image_size;
  const std::size_t npatch = opts.patches.size();
  const std::size_t nrules = opts.layouts.size();
  if (npatch == 0 || nrules == 0) throw DomainError("assembly demo needs patches and layouts");
  const std::size_t fm = feature_map_extent(side, w, w);
  const std::size_t sites = fm * fm;
  for (const auto& p : opts.patches) {
    if (p.size() != w * w) throw DomainError("assembly demo: patch size mismatch");
  }
  for (const auto& l : opts.layouts) {
    if (l.size() != sites) throw DomainError("assembly demo: layout must name one patch per site");
    for (std::size_t p : l) {
      if (p >= npatch) throw DomainError("assembly demo: layout refers to an unknown patch");
    }
  }

  AssemblyDemo demo;
  demo.options = opts;
  NetworkSpec& spec = demo.spec;
  spec.layers.push_back({"image", Shape::map(side, side, 1), Lagrangian::quadratic(), opts.tau_input});
  spec.layers.push_back({"features", Shape::map(fm, fm, npatch),
                         Lagrangian::channel_log_sum_exp(opts.beta_features), opts.tau_features});
  spec.layers.push_back({"rules", Shape::flat(nrules), Lagrangian::log_sum_exp(opts.beta_rules), 0.0});

  // kernel [w, w, 1, npatch]: output channel c holds patch c
  Tensor kernel(w * w * npatch);
  for (std::size_t c = 0; c < npatch; ++c) {
    for (std::size_t i = 0; i < w * w; ++i) kernel[i * npatch + c] = opts.patches[c][i];
  }
  spec.connections.push_back(Connection::conv(0, w, 1, npatch, w, std::move(kernel)));

  Tensor rules(nrules * sites * npatch, 0.0);
  for (std::size_t r = 0; r < nrules; ++r) {
    for (std::size_t s = 0; s < sites; ++s) {
      rules[r * sites * npatch + s * npatch + opts.layouts[r][s]] = opts.rule_gain;
    }
  }
  spec.connections.push_back(Connection::dense(1, nrules, sites * npatch, std::move(rules)));
  require_valid(spec);

  const Shape& img = spec.layers[0].shape;
  for (std::size_t r = 0; r < nrules; ++r) {
    Tensor m(img.size(), 0.0);
    for (std::size_t sy = 0; sy < fm; ++sy) {
      for (std::size_t sx = 0; sx < fm; ++sx) {
        const Tensor& p = opts.patches[opts.layouts[r][sy * fm + sx]];
        for (std::size_t ky = 0; ky < w; ++ky) {
          for (std::size_t kx = 0; kx < w; ++kx) m[img.index(sy * w + ky, sx * w + kx, 0)] = p[ky * w + kx];
        }
      }
    }
    demo.memories.patterns.push_back(std::move(m));
    demo.memories.labels.push_back("layout" + std::to_string(r));
  }
  return demo;
}

}  // namespace ham
