#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qvpo/config.hpp"
#include "qvpo/envs.hpp"
#include "qvpo/errors.hpp"
#include "qvpo/grid_oracle.hpp"
#include "qvpo/model_io.hpp"
#include "qvpo/plot.hpp"
#include "qvpo/trainer.hpp"

namespace {

const std::vector<std::string> kConfigKeys = {
    "env",           "total_steps",   "seed",          "n_d",
    "n_e",           "k_b",           "k_t",           "omega_ent",
    "transform",     "qcut_epsilon",  "gamma",         "tau",
    "batch_size",    "buffer_capacity", "actor_lr",    "critic_lr",
    "diffusion_steps", "beta_min",    "beta_max",      "eval_interval",
    "eval_episodes", "k_eval",        "out_dir",       "hidden_dim",
    "warmup_steps",  "bandit_strict_exponent"};

int run_train(const std::string& config_path,
              const std::map<std::string, std::string>& flags) {
  std::map<std::string, std::string> file_entries;
  if (!config_path.empty())
    file_entries = qvpo::parse_key_value_file(config_path);

  std::string env_name = "bandit";
  if (const auto it = file_entries.find("env"); it != file_entries.end())
    env_name = it->second;
  if (const auto it = flags.find("env"); it != flags.end())
    env_name = it->second;

  qvpo::TrainConfig config = qvpo::TrainConfig::defaults_for(env_name);
  for (const auto& [key, value] : file_entries)
    qvpo::set_config_key(config, key, value);
  for (const auto& [key, value] : flags)
    qvpo::set_config_key(config, key, value);

  const auto metrics_path = qvpo::train(config);
  std::cout << metrics_path.string() << "\n";
  return 0;
}

int run_eval(const std::string& model_path, long episodes, int k_eval,
             std::uint64_t seed) {
  const qvpo::ModelBundle bundle = qvpo::load_model(model_path);
  const auto env = qvpo::make_env(bundle.env, bundle.bandit_strict_exponent);
  const qvpo::DiffusionSchedule schedule = qvpo::build_schedule(
      bundle.diffusion_steps, bundle.beta_min, bundle.beta_max);
  const qvpo::EvalResult result =
      qvpo::evaluate(bundle.predictor, schedule, bundle.critic, *env, episodes,
                     k_eval, qvpo::Rng(seed));
  std::printf("mean_return=%.9g\nstd_return=%.9g\n", result.mean_return,
              result.std_return);
  if (bundle.env == "bandit") {
    // coverage of the raw policy distribution (no action selection)
    qvpo::Rng coverage_rng = qvpo::Rng(seed).split(1);
    Eigen::MatrixXd zero_states(episodes, env->spec().obs_dim);
    zero_states.setZero();
    const Eigen::MatrixXd samples = qvpo::sample_reverse_batch(
        schedule, bundle.predictor, zero_states, coverage_rng, env->spec().bounds);
    const auto* bandit = dynamic_cast<const qvpo::BanditEnv*>(env.get());
    std::vector<Eigen::Vector2d> actions, peaks;
    for (Eigen::Index i = 0; i < samples.rows(); ++i)
      actions.emplace_back(samples(i, 0), samples(i, 1));
    for (const auto& mu : bandit->params().mean) peaks.push_back(mu);
    const auto coverage = qvpo::mode_coverage(actions, peaks, 0.3);
    for (std::size_t i = 0; i < coverage.size(); ++i)
      std::printf("mode_coverage_peak%zu=%.9g\n", i + 1, coverage[i]);
  }
  return 0;
}

// Exhaustive re-normalization of the one-step optimal policy, coded
// separately from the library so the verify run has a second opinion.
Eigen::VectorXd brute_force_optimal(const Eigen::VectorXd& prior,
                                    const Eigen::VectorXd& q) {
  const Eigen::Index n = prior.size();
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  bool any_positive = false;
  for (Eigen::Index i = 0; i < n; ++i)
    if (q[i] > 0.0) any_positive = true;
  if (any_positive) {
    long double z = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i)
      if (q[i] > 0.0) z += static_cast<long double>(prior[i]) * q[i];
    for (Eigen::Index i = 0; i < n; ++i)
      if (q[i] > 0.0)
        mass[i] = static_cast<double>(
            static_cast<long double>(prior[i]) * q[i] / z);
    return mass;
  }
  double q_max = q[0];
  for (Eigen::Index i = 1; i < n; ++i) q_max = std::max(q_max, q[i]);
  long count = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (q[i] == q_max && prior[i] > 0.0) count += 1;
  for (Eigen::Index i = 0; i < n; ++i)
    if (q[i] == q_max && prior[i] > 0.0) mass[i] = 1.0 / count;
  return mass;
}

int run_verify() {
  int failures = 0;
  auto report = [&](const char* name, bool ok, double detail) {
    std::printf("[%s] %s (%.3g)\n", ok ? "PASS" : "FAIL", name, detail);
    if (!ok) failures += 1;
  };

  const qvpo::BanditParams bandit;
  qvpo::GridPolicy prior = qvpo::uniform_grid(100, 100, {-2.0, -2.0}, {2.0, 2.0});
  Eigen::VectorXd q(prior.cells());
  for (Eigen::Index i = 0; i < prior.cells(); ++i)
    q[i] = qvpo::bandit_reward(bandit, prior.cell_center(i));

  {
    const qvpo::GridPolicy improved = qvpo::optimal_one_step_policy(prior, q);
    const Eigen::VectorXd expected = brute_force_optimal(prior.mass, q);
    const double tv = 0.5 * (improved.mass - expected).cwiseAbs().sum();
    report("one-step optimal policy, positive branch vs brute force", tv < 1e-12, tv);
    const double total = improved.mass.sum();
    report("positive branch output is a pmf", std::abs(total - 1.0) < 1e-9,
           total - 1.0);
  }
  {
    const Eigen::VectorXd shifted = q.array() - q.maxCoeff() - 1.0;
    const qvpo::GridPolicy improved =
        qvpo::optimal_one_step_policy(prior, shifted);
    const Eigen::VectorXd expected = brute_force_optimal(prior.mass, shifted);
    const double tv = 0.5 * (improved.mass - expected).cwiseAbs().sum();
    report("one-step optimal policy, all-negative branch vs brute force",
           tv < 1e-12, tv);
  }
  {
    qvpo::Rng rng(7);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      qvpo::GridPolicy small = qvpo::uniform_grid(5, 5, {-1, -1}, {1, 1});
      for (Eigen::Index i = 0; i < small.cells(); ++i)
        small.mass[i] = rng.uniform();
      small.mass /= small.mass.sum();
      Eigen::VectorXd qs(small.cells());
      for (Eigen::Index i = 0; i < small.cells(); ++i)
        qs[i] = rng.uniform(-1.0, 2.0);
      if ((qs.array() <= 0.0).all()) qs[0] = 1.0;
      const double c = std::exp(rng.uniform(-3.0, 3.0));
      const auto a = qvpo::optimal_one_step_policy(small, qs);
      const auto b = qvpo::optimal_one_step_policy(
          small, Eigen::VectorXd(c * qs));
      worst = std::max(worst, (a.mass - b.mass).cwiseAbs().maxCoeff());
    }
    report("positive branch invariant under Q scaling", worst < 1e-12, worst);
  }
  {
    qvpo::Rng rng(11);
    const int n = 10000;
    std::vector<Eigen::Vector2d> actions(n);
    for (auto& a : actions)
      a = Eigen::Vector2d(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    std::vector<Eigen::Vector2d> peaks(bandit.mean.begin(), bandit.mean.end());
    const auto coverage = qvpo::mode_coverage(actions, peaks, 0.3);
    const double expected = M_PI * 0.3 * 0.3 / 16.0;
    const double se = std::sqrt(expected * (1.0 - expected) / n);
    double worst = 0.0;
    for (double c : coverage) worst = std::max(worst, std::abs(c - expected));
    report("mode coverage matches the uniform area ratio", worst < 3.0 * se,
           worst);
  }
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion-policy online RL trainer"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "run a training loop");
  std::string config_path;
  train_cmd->add_option("--config", config_path, "key=value config file");
  std::map<std::string, std::string> flag_values;
  for (const std::string& key : kConfigKeys) {
    train_cmd->add_option_function<std::string>(
        "--" + key,
        [&flag_values, key](const std::string& v) { flag_values[key] = v; },
        "override config key " + key);
  }

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model");
  std::string model_path;
  long eval_episodes = 100;
  int k_eval = 32;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--model", model_path, "model.json from a train run")
      ->required();
  eval_cmd->add_option("--episodes", eval_episodes, "episode count");
  eval_cmd->add_option("--k_eval", k_eval, "action selection count");
  eval_cmd->add_option("--seed", eval_seed, "evaluation seed");

  auto* plot_cmd = app.add_subcommand("plot", "render a metrics CSV as SVG");
  std::string metrics_path, svg_path;
  plot_cmd->add_option("--metrics", metrics_path, "metrics.csv path")->required();
  plot_cmd->add_option("--out", svg_path, "output SVG path")->required();

  auto* verify_cmd =
      app.add_subcommand("verify", "run the grid-oracle checks and report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return run_train(config_path, flag_values);
    if (eval_cmd->parsed())
      return run_eval(model_path, eval_episodes, k_eval, eval_seed);
    if (plot_cmd->parsed()) {
      qvpo::write_learning_curve_svg(metrics_path, svg_path);
      std::cout << svg_path << "\n";
      return 0;
    }
    if (verify_cmd->parsed()) return run_verify();
  } catch (const qvpo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const qvpo::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
