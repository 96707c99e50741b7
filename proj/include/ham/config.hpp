#pragma once

#include "ham/dynamics.hpp"
#include "ham/memory.hpp"
#include "ham/topology.hpp"
#include "ham/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ham {

/// Malformed or inconsistent configuration; carries the offending line
/// (0 when the problem is not tied to one line).
class ConfigError : public Error {
public:
  ConfigError(std::string source, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Parsed experiment description. The text format is line oriented:
///
///   # comment                      blank lines and '#'/';' comments ignored
///   [layer input]                  one section per layer, bottom to top
///   shape = flat 64                flat N | map H W C
///   lagrangian = quadratic         quadratic | logsumexp | channel_logsumexp | elementwise
///   beta = 4                       softmax kinds
///   function = logcosh             elementwise: identity | logcosh | relu
///   tau = 1
///
///   [connection]                   k-th section links layers k and k+1
///   kind = dense                   dense | conv | avgpool
///   window = 3                     conv kernel side / pooling window
///   stride = 1                     conv only
///   init = gaussian                zeros | gaussian | uniform | values | file
///   scale = 0.1                    gaussian/uniform amplitude
///   seed = 7
///   values = 1 2 3 4               init = values, row-major
///   file = weights.csv             init = file, rows concatenated
///
///   [integrator]  method, dt, adaptive, convergence_eps, max_steps, clamp_input
///   [relax]       init (zeros | cue | gaussian), cue, scale, seed, breakdown
///   [retrieve]    cue, reference
///   [capacity]    input_size, k_list, beta_list, trials, seed, noise, noise_level,
///                 tau_input, tau_hidden
///   [train]       patterns, unroll_steps, dt, learning_rate, epochs, batch_size,
///                 noise, noise_level, noise_seed, gradient, fd_step, backtracking,
///                 freeze_noise
///
/// Unknown sections and keys are rejected. Relative file paths are resolved
/// against the directory of the config file.
struct ExperimentConfig {
  std::string source;
  std::filesystem::path base_dir;

  std::optional<NetworkSpec> network;
  IntegratorConfig integrator;

  struct Relax {
    enum class Init { Zeros, Cue, Gaussian };
    Init init = Init::Zeros;
    std::filesystem::path cue;
    double scale = 1.0;
    std::uint64_t seed = 0;
    bool breakdown = false;
  } relax;

  struct Retrieve {
    std::filesystem::path cue;
    std::filesystem::path reference;
  } retrieve;

  bool has_capacity = false;
  CapacityConfig capacity;

  bool has_train = false;
  TrainConfig train;
  std::filesystem::path train_patterns;
};

ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>",
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Patterns from a CSV corpus or, for a .pgm path, a single image.
PatternSet load_patterns(const std::filesystem::path& path);

/// Text description of a network, readable by parse_config. Weights are
/// written inline with init = values, so the round trip is exact.
void write_network_config(std::ostream& os, const NetworkSpec& spec);

}  // namespace ham
