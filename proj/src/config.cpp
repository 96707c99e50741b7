#include "ham/config.hpp"
#include "ham/io.hpp"
#include "ham/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace ham {

ConfigError::ConfigError(std::string source, std::size_t line, const std::string& message)
    : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

namespace {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string type;
  std::string name;
  std::size_t line = 0;
  std::vector<Entry> entries;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

class Parser {
public:
  Parser(std::string source, std::filesystem::path base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const { throw ConfigError(source_, line, msg); }

  std::vector<Section> sections(std::istream& is) {
    std::vector<Section> out;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(is, raw)) {
      ++lineno;
      std::string line = raw;
      if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(lineno, "unterminated section header");
        const auto parts = words(line.substr(1, line.size() - 2));
        if (parts.empty()) fail(lineno, "empty section header");
        if (parts.size() > 2) fail(lineno, "section header takes at most a type and a name");
        out.push_back({parts[0], parts.size() > 1 ? parts[1] : std::string(), lineno, {}});
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
      if (out.empty()) fail(lineno, "key outside of any section");
      Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
      if (e.key.empty()) fail(lineno, "missing key");
      if (e.value.empty()) fail(lineno, "missing value for '" + e.key + "'");
      for (const auto& prev : out.back().entries) {
        if (prev.key == e.key) fail(lineno, "duplicate key '" + e.key + "' (first on line " + std::to_string(prev.line) + ")");
      }
      out.back().entries.push_back(std::move(e));
    }
    return out;
  }

  double number(const Entry& e) const {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto r = std::from_chars(b, end, v);
    if (r.ec != std::errc() || r.ptr != end) fail(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
    return v;
  }

  std::uint64_t count(const Entry& e) const { return count(e.value, e); }

  std::uint64_t count(const std::string& s, const Entry& e) const {
    std::uint64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      fail(e.line, "'" + e.key + "' expects a non-negative integer, got '" + s + "'");
    }
    return v;
  }

  bool flag(const Entry& e) const {
    if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0") return false;
    fail(e.line, "'" + e.key + "' expects true or false, got '" + e.value + "'");
  }

  std::vector<double> numbers(const Entry& e) const {
    std::vector<double> out;
    for (const auto& w : words(e.value)) out.push_back(number({e.key, w, e.line}));
    return out;
  }

  std::vector<std::size_t> counts(const Entry& e) const {
    std::vector<std::size_t> out;
    for (const auto& w : words(e.value)) out.push_back(count(w, e));
    return out;
  }

  template <typename T>
  T choice(const Entry& e, const std::vector<std::pair<std::string, T>>& options) const {
    std::string allowed;
    for (const auto& [name, v] : options) {
      if (name == e.value) return v;
      allowed += (allowed.empty() ? "" : " | ") + name;
    }
    fail(e.line, "'" + e.key + "' must be one of " + allowed + ", got '" + e.value + "'");
  }

  std::filesystem::path path(const Entry& e) const {
    std::filesystem::path p(e.value);
    return p.is_absolute() || base_.empty() ? p : base_ / p;
  }

  const std::string& source() const { return source_; }

private:
  std::string source_;
  std::filesystem::path base_;
};

void reject_unknown(const Parser& p, const Section& s, std::initializer_list<const char*> allowed) {
  for (const auto& e : s.entries) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return e.key == k; });
    if (!ok) {
      std::string list;
      for (const char* k : allowed) list += (list.empty() ? "" : ", ") + std::string(k);
      p.fail(e.line, "unknown key '" + e.key + "' in [" + s.type + "] (allowed: " + list + ")");
    }
  }
}

const Entry* find(const Section& s, const char* key) {
  for (const auto& e : s.entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

NoiseModel::Kind noise_kind(const Parser& p, const Entry& e) {
  return p.choice<NoiseModel::Kind>(e, {{"none", NoiseModel::Kind::None},
                                        {"bitflip", NoiseModel::Kind::BitFlip},
                                        {"gaussian", NoiseModel::Kind::GaussianAdditive},
                                        {"mask", NoiseModel::Kind::Mask}});
}

LayerSpec parse_layer(const Parser& p, const Section& s) {
  reject_unknown(p, s, {"shape", "lagrangian", "beta", "function", "tau"});
  LayerSpec l;
  l.name = s.name.empty() ? "layer" : s.name;
  const Entry* shape = find(s, "shape");
  if (!shape) p.fail(s.line, "[layer " + l.name + "] needs 'shape'");
  const auto w = words(shape->value);
  if (w[0] == "flat" && w.size() == 2) {
    l.shape = Shape::flat(p.count(w[1], *shape));
  } else if (w[0] == "map" && w.size() == 4) {
    l.shape = Shape::map(p.count(w[1], *shape), p.count(w[2], *shape), p.count(w[3], *shape));
  } else {
    p.fail(shape->line, "'shape' must be 'flat N' or 'map H W C'");
  }
  if (const Entry* e = find(s, "lagrangian")) {
    l.lagrangian.kind = p.choice<Lagrangian::Kind>(*e, {{"quadratic", Lagrangian::Kind::Quadratic},
                                                        {"logsumexp", Lagrangian::Kind::LogSumExp},
                                                        {"channel_logsumexp", Lagrangian::Kind::ChannelLogSumExp},
                                                        {"elementwise", Lagrangian::Kind::ElementwiseAdditive}});
  }
  if (const Entry* e = find(s, "beta")) {
    if (!l.lagrangian.is_softmax()) p.fail(e->line, "'beta' only applies to logsumexp lagrangians");
    l.lagrangian.beta = p.number(*e);
    if (!(l.lagrangian.beta > 0.0)) p.fail(e->line, "'beta' must be positive");
  }
  if (const Entry* e = find(s, "function")) {
    if (l.lagrangian.kind != Lagrangian::Kind::ElementwiseAdditive) {
      p.fail(e->line, "'function' only applies to elementwise lagrangians");
    }
    l.lagrangian.function = p.choice<Lagrangian::Function>(*e, {{"identity", Lagrangian::Function::Identity},
                                                                {"logcosh", Lagrangian::Function::LogCosh},
                                                                {"relu", Lagrangian::Function::Relu}});
  }
  if (const Entry* e = find(s, "tau")) {
    l.tau = p.number(*e);
    if (!(l.tau >= 0.0)) p.fail(e->line, "'tau' must be >= 0");
  }
  return l;
}

Connection parse_connection(const Parser& p, const Section& s, const NetworkSpec& spec, std::size_t index) {
  reject_unknown(p, s, {"kind", "window", "stride", "init", "scale", "seed", "values", "file"});
  if (index + 1 >= spec.layers.size()) {
    p.fail(s.line, "connection " + std::to_string(index + 1) + " has no layer " + std::to_string(index + 2) + " above it");
  }
  const Shape& lo = spec.layers[index].shape;
  const Shape& up = spec.layers[index + 1].shape;
  const Entry* kind = find(s, "kind");
  if (!kind) p.fail(s.line, "[connection] needs 'kind'");
  const auto k = p.choice<Connection::Kind>(
      *kind, {{"dense", Connection::Kind::Dense}, {"conv", Connection::Kind::Conv}, {"avgpool", Connection::Kind::AvgPool}});
  std::size_t window = 1, stride = 1;
  if (const Entry* e = find(s, "window")) window = p.count(*e);
  if (const Entry* e = find(s, "stride")) {
    if (k != Connection::Kind::Conv) p.fail(e->line, "'stride' only applies to conv connections");
    stride = p.count(*e);
  }
  if (k != Connection::Kind::Dense && !find(s, "window")) p.fail(kind->line, "conv/avgpool connections need 'window'");
  if (k == Connection::Kind::Dense && find(s, "window")) p.fail(find(s, "window")->line, "'window' does not apply to dense");

  Connection c;
  switch (k) {
    case Connection::Kind::Dense:
      c = Connection::dense(index, up.size(), lo.size(), {});
      break;
    case Connection::Kind::Conv:
      c = Connection::conv(index, window, lo.channels, up.channels, stride, {});
      break;
    case Connection::Kind::AvgPool:
      c = Connection::avg_pool(index, window);
      break;
  }
  const std::size_t n = c.weight_count();
  const Entry* init = find(s, "init");
  if (k == Connection::Kind::AvgPool) {
    if (init) p.fail(init->line, "avgpool connections carry no weights");
    return c;
  }
  enum class Init { Zeros, Gaussian, Uniform, Values, File };
  const Init mode = init ? p.choice<Init>(*init, {{"zeros", Init::Zeros},
                                                  {"gaussian", Init::Gaussian},
                                                  {"uniform", Init::Uniform},
                                                  {"values", Init::Values},
                                                  {"file", Init::File}})
                         : Init::Zeros;
  double scale = 1.0;
  std::uint64_t seed = 0;
  if (const Entry* e = find(s, "scale")) scale = p.number(*e);
  if (const Entry* e = find(s, "seed")) seed = p.count(*e);
  const std::size_t where = init ? init->line : s.line;
  switch (mode) {
    case Init::Zeros:
      c.weights.assign(n, 0.0);
      break;
    case Init::Gaussian: {
      Rng rng(seed);
      c.weights.resize(n);
      for (double& w : c.weights) w = scale * rng.gaussian();
      break;
    }
    case Init::Uniform: {
      Rng rng(seed);
      c.weights.resize(n);
      for (double& w : c.weights) w = scale * (2.0 * rng.uniform() - 1.0);
      break;
    }
    case Init::Values: {
      const Entry* e = find(s, "values");
      if (!e) p.fail(where, "init = values needs 'values'");
      c.weights = p.numbers(*e);
      break;
    }
    case Init::File: {
      const Entry* e = find(s, "file");
      if (!e) p.fail(where, "init = file needs 'file'");
      try {
        for (const auto& row : load_pattern_csv(p.path(*e))) c.weights.insert(c.weights.end(), row.begin(), row.end());
      } catch (const Error& err) {
        p.fail(e->line, err.what());
      }
      break;
    }
  }
  if (c.weights.size() != n) {
    p.fail(where, c.str() + " needs " + std::to_string(n) + " weights, got " + std::to_string(c.weights.size()));
  }
  return c;
}

void parse_integrator(const Parser& p, const Section& s, IntegratorConfig& cfg) {
  reject_unknown(p, s, {"method", "dt", "adaptive", "convergence_eps", "max_steps", "clamp_input"});
  for (const auto& e : s.entries) {
    if (e.key == "method") {
      cfg.method = p.choice<IntegratorConfig::Method>(e, {{"euler", IntegratorConfig::Method::Euler},
                                                          {"rk4", IntegratorConfig::Method::RK4}});
    } else if (e.key == "dt") {
      cfg.dt = p.number(e);
      if (!(cfg.dt > 0.0)) p.fail(e.line, "'dt' must be positive");
    } else if (e.key == "adaptive") {
      cfg.adaptive = p.flag(e);
    } else if (e.key == "convergence_eps") {
      cfg.convergence_eps = p.number(e);
      if (!(cfg.convergence_eps > 0.0)) p.fail(e.line, "'convergence_eps' must be positive");
    } else if (e.key == "max_steps") {
      cfg.max_steps = p.count(e);
    } else if (e.key == "clamp_input") {
      cfg.clamp_input = p.flag(e);
    }
  }
}

void parse_relax(const Parser& p, const Section& s, ExperimentConfig::Relax& r) {
  reject_unknown(p, s, {"init", "cue", "scale", "seed", "breakdown"});
  using Init = ExperimentConfig::Relax::Init;
  for (const auto& e : s.entries) {
    if (e.key == "init") {
      r.init = p.choice<Init>(e, {{"zeros", Init::Zeros}, {"cue", Init::Cue}, {"gaussian", Init::Gaussian}});
    } else if (e.key == "cue") {
      r.cue = p.path(e);
    } else if (e.key == "scale") {
      r.scale = p.number(e);
    } else if (e.key == "seed") {
      r.seed = p.count(e);
    } else if (e.key == "breakdown") {
      r.breakdown = p.flag(e);
    }
  }
  if (r.init == Init::Cue && r.cue.empty()) p.fail(s.line, "[relax] init = cue needs 'cue'");
}

void parse_capacity(const Parser& p, const Section& s, CapacityConfig& c) {
  reject_unknown(p, s, {"input_size", "k_list", "beta_list", "trials", "seed", "noise", "noise_level",
                        "tau_input", "tau_hidden"});
  for (const auto& e : s.entries) {
    if (e.key == "input_size") {
      c.input_size = p.count(e);
      if (c.input_size == 0) p.fail(e.line, "'input_size' must be >= 1");
    } else if (e.key == "k_list") {
      c.k_list = p.counts(e);
      if (c.k_list.empty() || std::count(c.k_list.begin(), c.k_list.end(), 0u) > 0) {
        p.fail(e.line, "'k_list' needs positive integers");
      }
    } else if (e.key == "beta_list") {
      c.beta_list = p.numbers(e);
      if (c.beta_list.empty() || std::any_of(c.beta_list.begin(), c.beta_list.end(), [](double b) { return !(b > 0.0); })) {
        p.fail(e.line, "'beta_list' needs positive numbers");
      }
    } else if (e.key == "trials") {
      c.trials = p.count(e);
      if (c.trials == 0) p.fail(e.line, "'trials' must be >= 1");
    } else if (e.key == "seed") {
      c.seed = p.count(e);
    } else if (e.key == "noise") {
      c.noise.kind = noise_kind(p, e);
    } else if (e.key == "noise_level") {
      c.noise.level = p.number(e);
    } else if (e.key == "tau_input") {
      c.store.tau_input = p.number(e);
    } else if (e.key == "tau_hidden") {
      c.store.tau_hidden = p.number(e);
    }
  }
  try {
    c.noise.check();
  } catch (const DomainError& err) {
    p.fail(s.line, err.what());
  }
}

void parse_train(const Parser& p, const Section& s, ExperimentConfig& cfg) {
  reject_unknown(p, s, {"patterns", "unroll_steps", "dt", "learning_rate", "epochs", "batch_size", "noise",
                        "noise_level", "noise_seed", "gradient", "fd_step", "backtracking", "freeze_noise"});
  TrainConfig& t = cfg.train;
  for (const auto& e : s.entries) {
    if (e.key == "patterns") {
      cfg.train_patterns = p.path(e);
    } else if (e.key == "unroll_steps") {
      t.unroll_steps = p.count(e);
      if (t.unroll_steps == 0) p.fail(e.line, "'unroll_steps' must be >= 1");
    } else if (e.key == "dt") {
      t.dt = p.number(e);
      if (!(t.dt > 0.0)) p.fail(e.line, "'dt' must be positive");
    } else if (e.key == "learning_rate") {
      t.learning_rate = p.number(e);
      if (!(t.learning_rate >= 0.0)) p.fail(e.line, "'learning_rate' must be >= 0");
    } else if (e.key == "epochs") {
      t.epochs = p.count(e);
    } else if (e.key == "batch_size") {
      t.batch_size = p.count(e);
    } else if (e.key == "noise") {
      t.noise.kind = noise_kind(p, e);
    } else if (e.key == "noise_level") {
      t.noise.level = p.number(e);
    } else if (e.key == "noise_seed") {
      t.noise.seed = p.count(e);
    } else if (e.key == "gradient") {
      t.gradient_mode = p.choice<TrainConfig::GradientMode>(
          e, {{"analytic", TrainConfig::GradientMode::Analytic},
              {"finite_difference", TrainConfig::GradientMode::FiniteDifference}});
    } else if (e.key == "fd_step") {
      t.fd_step = p.number(e);
      if (!(t.fd_step > 0.0)) p.fail(e.line, "'fd_step' must be positive");
    } else if (e.key == "backtracking") {
      t.backtracking = p.flag(e);
    } else if (e.key == "freeze_noise") {
      t.freeze_noise = p.flag(e);
    }
  }
  try {
    t.noise.check();
  } catch (const DomainError& err) {
    p.fail(s.line, err.what());
  }
  if (cfg.train_patterns.empty()) p.fail(s.line, "[train] needs 'patterns'");
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source, const std::filesystem::path& base_dir) {
  Parser p(source, base_dir);
  const auto sections = p.sections(is);
  ExperimentConfig cfg;
  cfg.source = source;
  cfg.base_dir = base_dir;

  NetworkSpec spec;
  std::vector<const Section*> conn_sections;
  std::set<std::string> seen;
  std::set<std::string> layer_names;
  for (const auto& s : sections) {
    if (s.type == "layer") {
      if (!conn_sections.empty()) p.fail(s.line, "layers must be declared before connections");
      LayerSpec l = parse_layer(p, s);
      if (!layer_names.insert(l.name).second) p.fail(s.line, "duplicate layer name '" + l.name + "'");
      spec.layers.push_back(std::move(l));
      continue;
    }
    if (s.type == "connection") {
      conn_sections.push_back(&s);
      continue;
    }
    if (!s.name.empty()) p.fail(s.line, "[" + s.type + "] takes no name");
    if (!seen.insert(s.type).second) p.fail(s.line, "duplicate section [" + s.type + "]");
    if (s.type == "integrator") {
      parse_integrator(p, s, cfg.integrator);
    } else if (s.type == "relax") {
      parse_relax(p, s, cfg.relax);
    } else if (s.type == "retrieve") {
      reject_unknown(p, s, {"cue", "reference"});
      if (const Entry* e = find(s, "cue")) cfg.retrieve.cue = p.path(*e);
      if (const Entry* e = find(s, "reference")) cfg.retrieve.reference = p.path(*e);
    } else if (s.type == "capacity") {
      cfg.has_capacity = true;
      parse_capacity(p, s, cfg.capacity);
    } else if (s.type == "train") {
      cfg.has_train = true;
      parse_train(p, s, cfg);
    } else {
      p.fail(s.line, "unknown section [" + s.type + "]");
    }
  }
  cfg.capacity.integrator = cfg.integrator;

  if (!spec.layers.empty()) {
    for (std::size_t i = 0; i < conn_sections.size(); ++i) {
      spec.connections.push_back(parse_connection(p, *conn_sections[i], spec, i));
    }
    const auto violations = validate(spec);
    if (!violations.empty()) {
      std::string msg = "network does not validate:";
      for (const auto& v : violations) msg += "\n  " + v;
      p.fail(0, msg);
    }
    cfg.network = std::move(spec);
  } else if (!conn_sections.empty()) {
    p.fail(conn_sections.front()->line, "connection declared without layers");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse_config(is, path.string(), path.parent_path());
}

PatternSet load_patterns(const std::filesystem::path& path) {
  PatternSet set;
  if (path.extension() == ".pgm") {
    set.patterns.push_back(load_pgm(path).pixels);
  } else {
    set.patterns = load_pattern_csv(path);
  }
  return set;
}

void write_network_config(std::ostream& os, const NetworkSpec& spec) {
  for (const auto& l : spec.layers) {
    os << "[layer " << l.name << "]\n";
    if (l.shape.is_map()) {
      os << "shape = map " << l.shape.height << ' ' << l.shape.width << ' ' << l.shape.channels << '\n';
    } else {
      os << "shape = flat " << l.shape.size() << '\n';
    }
    switch (l.lagrangian.kind) {
      case Lagrangian::Kind::Quadratic:
        os << "lagrangian = quadratic\n";
        break;
      case Lagrangian::Kind::LogSumExp:
        os << "lagrangian = logsumexp\nbeta = " << format_double(l.lagrangian.beta) << '\n';
        break;
      case Lagrangian::Kind::ChannelLogSumExp:
        os << "lagrangian = channel_logsumexp\nbeta = " << format_double(l.lagrangian.beta) << '\n';
        break;
      case Lagrangian::Kind::ElementwiseAdditive:
        os << "lagrangian = elementwise\nfunction = "
           << (l.lagrangian.function == Lagrangian::Function::Identity  ? "identity"
               : l.lagrangian.function == Lagrangian::Function::LogCosh ? "logcosh"
                                                                        : "relu")
           << '\n';
        break;
    }
    os << "tau = " << format_double(l.tau) << "\n\n";
  }
  for (const auto& c : spec.connections) {
    os << "[connection]\n";
    switch (c.kind) {
      case Connection::Kind::Dense:
        os << "kind = dense\n";
        break;
      case Connection::Kind::Conv:
        os << "kind = conv\nwindow = " << c.window << "\nstride = " << c.stride << '\n';
        break;
      case Connection::Kind::AvgPool:
        os << "kind = avgpool\nwindow = " << c.window << "\n\n";
        continue;
    }
    os << "init = values\nvalues =";
    for (double w : c.weights) os << ' ' << format_double(w);
    os << "\n\n";
  }
}

}  // namespace ham
