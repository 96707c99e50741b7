#include "cli.hpp"

#include "ham/config.hpp"
#include "ham/io.hpp"
#include "ham/memory.hpp"
#include "ham/rng.hpp"
#include "ham/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace ham::cli {

namespace fs = std::filesystem;

namespace {

fs::path output_path(const std::string& requested) {
  fs::path p(requested);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("HAM_OUTPUT_DIR"); dir != nullptr && *dir != '\0') p = fs::path(dir) / p;
  }
  return p;
}

// Writes through `emit` into `requested`, creating missing parent directories.
fs::path write_output(const std::string& requested, const std::function<void(std::ostream&)>& emit,
                      bool binary = false) {
  const fs::path p = output_path(requested);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
  if (!os) throw Error("cannot write '" + p.string() + "'");
  emit(os);
  os.flush();
  if (!os) throw Error("write failed for '" + p.string() + "'");
  return p;
}

// Missing or unreadable inputs are configuration problems.
PatternSet read_inputs(const fs::path& path, const char* what) {
  if (path.empty()) throw ConfigError("<command line>", 0, std::string("no ") + what + " given");
  try {
    PatternSet set = load_patterns(path);
    if (set.patterns.empty()) throw Error("no patterns in file");
    return set;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path.string(), 0, std::string(what) + ": " + e.what());
  }
}

const NetworkSpec& need_network(const ExperimentConfig& cfg) {
  if (!cfg.network) throw ConfigError(cfg.source, 0, "config defines no network");
  return *cfg.network;
}

std::string describe(const Shape& s) {
  std::ostringstream os;
  if (s.is_map()) {
    os << "map " << s.height << 'x' << s.width << 'x' << s.channels;
  } else {
    os << "flat " << s.size();
  }
  return os.str();
}

int cmd_validate(const std::string& cfg_path, std::ostream& out) {
  const ExperimentConfig cfg = load_config(cfg_path);
  if (cfg.network) {
    const NetworkSpec& s = *cfg.network;
    std::size_t weights = 0;
    for (const auto& c : s.connections) weights += c.weights.size();
    out << "network: " << s.layers.size() << " layers, " << s.connections.size() << " connections, " << weights
        << " weights\n";
    for (const auto& l : s.layers) {
      out << "  " << l.name << ": " << describe(l.shape) << ", tau " << format_double(l.tau) << '\n';
    }
  }
  if (cfg.has_capacity) out << "capacity sweep: " << cfg.capacity.k_list.size() << " x " << cfg.capacity.beta_list.size() << " cells\n";
  if (cfg.has_train) out << "training: " << cfg.train.epochs << " epochs\n";
  out << "ok\n";
  return kOk;
}

NetworkState initial_state(const ExperimentConfig& cfg, const NetworkSpec& spec) {
  using Init = ExperimentConfig::Relax::Init;
  switch (cfg.relax.init) {
    case Init::Zeros:
      return zero_state(spec);
    case Init::Cue:
      return cue_state(spec, read_inputs(cfg.relax.cue, "relax cue").patterns.front());
    case Init::Gaussian: {
      NetworkState s = zero_state(spec);
      Rng rng(cfg.relax.seed);
      for (auto& x : s.layers)
        for (double& v : x) v = cfg.relax.scale * rng.gaussian();
      return s;
    }
  }
  return zero_state(spec);
}

int cmd_relax(const std::string& cfg_path, const std::string& trace, bool breakdown, std::ostream& out) {
  const ExperimentConfig cfg = load_config(cfg_path);
  const NetworkSpec& spec = need_network(cfg);
  const bool with_breakdown = breakdown || cfg.relax.breakdown;
  const Relaxation r = relax(spec, initial_state(cfg, spec), cfg.integrator, with_breakdown);
  if (!trace.empty()) {
    const fs::path p = write_output(trace, [&](std::ostream& os) { r.trace.write_csv(os, spec, with_breakdown); });
    out << "trace: " << p.string() << '\n';
  }
  std::size_t flagged = 0;
  double rise = 0.0;
  for (std::size_t i = 1; i < r.trace.rows.size(); ++i) {
    if (!r.trace.rows[i].flagged) continue;
    ++flagged;
    rise = std::max(rise, r.trace.rows[i].energy - r.trace.rows[i - 1].energy);
  }
  out << (r.converged ? "converged" : "not converged") << " after " << r.steps << " steps\n";
  out << "energy: " << format_double(r.trace.rows.front().energy) << " -> " << format_double(r.trace.rows.back().energy)
      << '\n';
  if (flagged > 0) {
    out << "flagged steps: " << flagged << " (largest energy rise " << format_double(rise) << ")\n";
  }
  return kOk;
}

int cmd_retrieve(const std::string& cfg_path, const std::string& cue_arg, const std::string& report,
                 const std::string& retrieved_out, std::ostream& out) {
  const ExperimentConfig cfg = load_config(cfg_path);
  const NetworkSpec& spec = need_network(cfg);
  const PatternSet cues = read_inputs(cue_arg.empty() ? cfg.retrieve.cue : fs::path(cue_arg), "cue");
  PatternSet refs;
  if (!cfg.retrieve.reference.empty()) {
    refs = read_inputs(cfg.retrieve.reference, "reference");
    if (refs.size() != 1 && refs.size() != cues.size()) {
      throw ConfigError(cfg.source, 0,
                        "reference file has " + std::to_string(refs.size()) + " patterns for " +
                            std::to_string(cues.size()) + " cues");
    }
  }

  std::ostringstream table;
  table << "index," << RecallReport::csv_header() << '\n';
  std::vector<Tensor> retrieved;
  std::size_t successes = 0;
  for (std::size_t i = 0; i < cues.size(); ++i) {
    std::optional<std::span<const double>> ref;
    if (!refs.patterns.empty()) ref = refs.patterns[refs.size() == 1 ? 0 : i];
    const Retrieval r = retrieve(spec, cues.patterns[i], cfg.integrator, ref);
    table << i << ',' << r.report.csv_row() << '\n';
    successes += r.report.success() ? 1 : 0;
    retrieved.push_back(r.retrieved);
  }
  if (!report.empty()) {
    const fs::path p = write_output(report, [&](std::ostream& os) { os << table.str(); });
    out << "report: " << p.string() << '\n';
  } else {
    out << table.str();
  }
  if (!retrieved_out.empty()) {
    const Shape& in = spec.layers[0].shape;
    const bool pgm = fs::path(retrieved_out).extension() == ".pgm";
    if (pgm && (retrieved.size() != 1 || !in.is_map() || in.channels != 1)) {
      throw DomainError("pgm output needs one cue and a single-channel image input layer");
    }
    const fs::path p = write_output(retrieved_out, [&](std::ostream& os) {
      if (pgm) {
        write_pgm(os, Image{in.height, in.width, retrieved.front()});
      } else {
        write_pattern_csv(os, retrieved);
      }
    }, true);
    out << "retrieved: " << p.string() << '\n';
  }
  out << successes << " of " << cues.size() << " retrievals succeeded\n";
  return kOk;
}

int cmd_capacity(const std::string& cfg_path, const std::string& table, std::ostream& out) {
  const ExperimentConfig cfg = load_config(cfg_path);
  if (!cfg.has_capacity) throw ConfigError(cfg.source, 0, "config has no [capacity] section");
  const auto rows = capacity_sweep(cfg.capacity);
  if (!table.empty()) {
    const fs::path p = write_output(table, [&](std::ostream& os) { write_capacity_csv(os, rows); });
    out << "table: " << p.string() << '\n';
  } else {
    write_capacity_csv(out, rows);
  }
  return kOk;
}

int cmd_train(const std::string& cfg_path, const std::string& model, const std::string& curve, std::ostream& out,
              std::ostream& err) {
  const ExperimentConfig cfg = load_config(cfg_path);
  const NetworkSpec& spec = need_network(cfg);
  if (!cfg.has_train) throw ConfigError(cfg.source, 0, "config has no [train] section");
  const PatternSet corpus = read_inputs(cfg.train_patterns, "training patterns");
  const TrainResult r = train(spec, corpus, cfg.train);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';
  if (!curve.empty()) {
    const fs::path p = write_output(curve, [&](std::ostream& os) { write_loss_csv(os, r.loss_curve); });
    out << "curve: " << p.string() << '\n';
  }
  if (!model.empty()) {
    const fs::path p = write_output(model, [&](std::ostream& os) { write_network(os, r.spec); }, true);
    out << "model: " << p.string() << '\n';
  }
  out << "epochs: " << r.loss_curve.size() << '\n';
  if (!r.loss_curve.empty()) out << "final loss: " << format_double(r.loss_curve.back()) << '\n';
  if (r.diverged) {
    err << "training diverged\n";
    return kDomainError;
  }
  return kOk;
}

// Zeroes half of a square single-channel image.
Tensor half_masked(const Tensor& image, std::size_t side, const std::string& half) {
  Tensor cue = image;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      const bool drop = (half == "top" && r >= side / 2) || (half == "bottom" && r < side / 2) ||
                        (half == "left" && c >= side / 2) || (half == "right" && c < side / 2);
      if (drop) cue[r * side + c] = 0.0;
    }
  return cue;
}

int cmd_demo_assembly(const std::string& report, const std::string& model, std::ostream& out) {
  const AssemblyDemo demo = build_assembly_demo();
  const std::size_t side = demo.options.image_size;
  std::ostringstream table;
  table << "memory,kept," << RecallReport::csv_header() << '\n';
  for (std::size_t m = 0; m < demo.memories.size(); ++m) {
    const Tensor& target = demo.memories.patterns[m];
    for (const char* half : {"top", "bottom", "left", "right"}) {
      const Retrieval r = retrieve(demo.spec, half_masked(target, side, half), {}, std::span<const double>(target));
      table << m << ',' << half << ',' << r.report.csv_row() << '\n';
    }
  }
  if (!report.empty()) {
    const fs::path p = write_output(report, [&](std::ostream& os) { os << table.str(); });
    out << "report: " << p.string() << '\n';
  } else {
    out << table.str();
  }
  if (!model.empty()) {
    const fs::path p = write_output(model, [&](std::ostream& os) { write_network(os, demo.spec); }, true);
    out << "model: " << p.string() << '\n';
  }
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical associative memory networks"};
  app.name("ham");
  app.require_subcommand(1);

  std::string cfg_path;
  std::string trace, report, cue, retrieved, table, model, curve, demo_name;
  bool breakdown = false;

  auto* validate = app.add_subcommand("validate", "Parse a config and check the network");
  validate->add_option("config", cfg_path, "Config file")->required();

  auto* relax_cmd = app.add_subcommand("relax", "Relax the network and record the energy trace");
  relax_cmd->add_option("config", cfg_path, "Config file")->required();
  relax_cmd->add_option("--trace", trace, "Trace CSV output");
  relax_cmd->add_flag("--breakdown", breakdown, "Add per-term energy columns");

  auto* retrieve_cmd = app.add_subcommand("retrieve", "Retrieve memories from cues");
  retrieve_cmd->add_option("config", cfg_path, "Config file")->required();
  retrieve_cmd->add_option("--cue", cue, "Cue patterns (CSV or PGM)");
  retrieve_cmd->add_option("--report", report, "Report CSV output");
  retrieve_cmd->add_option("--retrieved", retrieved, "Retrieved patterns (CSV or PGM)");

  auto* capacity_cmd = app.add_subcommand("capacity", "Run a capacity sweep");
  capacity_cmd->add_option("config", cfg_path, "Config file")->required();
  capacity_cmd->add_option("--out", table, "Sweep CSV output");

  auto* train_cmd = app.add_subcommand("train", "Train weights by unrolled backpropagation");
  train_cmd->add_option("config", cfg_path, "Config file")->required();
  train_cmd->add_option("--out", model, "Trained network (binary)");
  train_cmd->add_option("--curve", curve, "Loss curve CSV output");

  auto* demo = app.add_subcommand("demo", "Built-in demonstrations");
  demo->add_option("name", demo_name, "Demo name")->required()->check(CLI::IsMember({"assembly"}));
  demo->add_option("--report", report, "Report CSV output");
  demo->add_option("--out", model, "Demo network (binary)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*validate) return cmd_validate(cfg_path, out);
    if (*relax_cmd) return cmd_relax(cfg_path, trace, breakdown, out);
    if (*retrieve_cmd) return cmd_retrieve(cfg_path, cue, report, retrieved, out);
    if (*capacity_cmd) return cmd_capacity(cfg_path, table, out);
    if (*train_cmd) return cmd_train(cfg_path, model, curve, out, err);
    if (*demo) return cmd_demo_assembly(report, model, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
  return kConfigError;
}

}  // namespace ham::cli
