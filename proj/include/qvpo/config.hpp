#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace qvpo {

/// Full training-run configuration. Field names double as the keys of the
/// key=value config file and of the CLI flags.
struct TrainConfig {
  std::string env = "bandit";
  long total_steps = 20000;
  std::uint64_t seed = 0;

  // policy
  int n_d = 64;
  int n_e = 10;
  int k_b = 4;
  int k_t = 2;
  double omega_ent = 0.01;
  std::string transform = "qadv";
  double qcut_epsilon = 1e-6;

  // critic
  double gamma = 0.99;
  double tau = 0.005;

  int batch_size = 256;
  std::size_t buffer_capacity = 1000000;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;

  int diffusion_steps = 20;
  double beta_min = 1e-4;
  double beta_max = 0.02;

  long eval_interval = 1000;
  long eval_episodes = 10;
  int k_eval = 32;

  std::string out_dir = ".";

  int hidden_dim = 256;
  long warmup_steps = 1000;
  bool bandit_strict_exponent = false;

  /// Desk-scale presets per environment (narrower networks and fewer
  /// diffusion samples per state, sized for CPU runs).
  static TrainConfig defaults_for(const std::string& env_name);

  void validate() const;  // throws ConfigError
};

/// Parses one key. Unknown keys and unparsable values raise ConfigError.
void set_config_key(TrainConfig& config, const std::string& key,
                    const std::string& value);

/// Reads a flat key=value file ('#' starts a comment). The env key, when
/// present, selects the per-env defaults before the remaining keys apply.
TrainConfig load_config_file(const std::filesystem::path& path);

/// Same file format, applied on top of an existing config.
void apply_config_file(TrainConfig& config, const std::filesystem::path& path);

std::map<std::string, std::string> parse_key_value_file(
    const std::filesystem::path& path);

}  // namespace qvpo
