#include "qvpo/config.hpp"

#include <fstream>
#include <stdexcept>

#include "qvpo/errors.hpp"
#include "qvpo/policy.hpp"

namespace qvpo {

TrainConfig TrainConfig::defaults_for(const std::string& env_name) {
  TrainConfig config;
  config.env = env_name;
  if (env_name == "bandit") {
    config.total_steps = 20000;
    config.hidden_dim = 48;
    config.n_d = 8;
    config.batch_size = 64;
    config.eval_interval = 1000;
    config.eval_episodes = 1000;  // one action per episode; also feeds coverage
  } else if (env_name == "pendulum") {
    config.total_steps = 50000;
    config.hidden_dim = 48;
    config.n_d = 8;
    config.batch_size = 48;
    config.eval_interval = 2500;
    config.eval_episodes = 10;
  } else {
    throw ConfigError("unknown environment '" + env_name +
                      "' (expected bandit or pendulum)");
  }
  return config;
}

void TrainConfig::validate() const {
  if (env != "bandit" && env != "pendulum")
    throw ConfigError("config: unknown env '" + env + "'");
  if (total_steps < 0) throw ConfigError("config: total_steps must be >= 0");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (buffer_capacity < 1) throw ConfigError("config: buffer_capacity must be >= 1");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0))
    throw ConfigError("config: learning rates must be > 0");
  if (diffusion_steps < 1) throw ConfigError("config: diffusion_steps must be >= 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
    throw ConfigError("config: need 0 < beta_min <= beta_max < 1");
  if (eval_interval < 1) throw ConfigError("config: eval_interval must be >= 1");
  if (eval_episodes < 1) throw ConfigError("config: eval_episodes must be >= 1");
  if (k_eval < 1) throw ConfigError("config: k_eval must be >= 1");
  if (hidden_dim < 1) throw ConfigError("config: hidden_dim must be >= 1");
  if (warmup_steps < 0) throw ConfigError("config: warmup_steps must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("config: need 0 <= gamma < 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("config: need 0 < tau <= 1");
  if (n_d < 1) throw ConfigError("config: n_d must be >= 1");
  if (n_e < 0) throw ConfigError("config: n_e must be >= 0");
  if (k_b < 1) throw ConfigError("config: k_b must be >= 1");
  if (k_t < 1 || k_t > k_b) throw ConfigError("config: need 1 <= k_t <= k_b");
  if (omega_ent < 0.0) throw ConfigError("config: omega_ent must be >= 0");
  if (!(qcut_epsilon > 0.0)) throw ConfigError("config: qcut_epsilon must be > 0");
  parse_transform(transform);
}

namespace {

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad bool for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void set_config_key(TrainConfig& config, const std::string& key,
                    const std::string& value) {
  if (key == "env") config.env = value;
  else if (key == "total_steps") config.total_steps = parse_long(key, value);
  else if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_long(key, value));
  else if (key == "n_d") config.n_d = static_cast<int>(parse_long(key, value));
  else if (key == "n_e") config.n_e = static_cast<int>(parse_long(key, value));
  else if (key == "k_b") config.k_b = static_cast<int>(parse_long(key, value));
  else if (key == "k_t") config.k_t = static_cast<int>(parse_long(key, value));
  else if (key == "omega_ent") config.omega_ent = parse_double(key, value);
  else if (key == "transform") config.transform = value;
  else if (key == "qcut_epsilon") config.qcut_epsilon = parse_double(key, value);
  else if (key == "gamma") config.gamma = parse_double(key, value);
  else if (key == "tau") config.tau = parse_double(key, value);
  else if (key == "batch_size") config.batch_size = static_cast<int>(parse_long(key, value));
  else if (key == "buffer_capacity") config.buffer_capacity = static_cast<std::size_t>(parse_long(key, value));
  else if (key == "actor_lr") config.actor_lr = parse_double(key, value);
  else if (key == "critic_lr") config.critic_lr = parse_double(key, value);
  else if (key == "diffusion_steps") config.diffusion_steps = static_cast<int>(parse_long(key, value));
  else if (key == "beta_min") config.beta_min = parse_double(key, value);
  else if (key == "beta_max") config.beta_max = parse_double(key, value);
  else if (key == "eval_interval") config.eval_interval = parse_long(key, value);
  else if (key == "eval_episodes") config.eval_episodes = parse_long(key, value);
  else if (key == "k_eval") config.k_eval = static_cast<int>(parse_long(key, value));
  else if (key == "out_dir") config.out_dir = value;
  else if (key == "hidden_dim") config.hidden_dim = static_cast<int>(parse_long(key, value));
  else if (key == "warmup_steps") config.warmup_steps = parse_long(key, value);
  else if (key == "bandit_strict_exponent") config.bandit_strict_exponent = parse_bool(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::map<std::string, std::string> parse_key_value_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::map<std::string, std::string> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no += 1;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
    entries[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return entries;
}

void apply_config_file(TrainConfig& config, const std::filesystem::path& path) {
  for (const auto& [key, value] : parse_key_value_file(path))
    set_config_key(config, key, value);
}

TrainConfig load_config_file(const std::filesystem::path& path) {
  const auto entries = parse_key_value_file(path);
  const auto env_it = entries.find("env");
  TrainConfig config =
      TrainConfig::defaults_for(env_it != entries.end() ? env_it->second : "bandit");
  for (const auto& [key, value] : entries) set_config_key(config, key, value);
  return config;
}

}  // namespace qvpo
