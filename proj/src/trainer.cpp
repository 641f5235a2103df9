#include "qvpo/trainer.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include "qvpo/errors.hpp"
#include "qvpo/grid_oracle.hpp"
#include "qvpo/metrics.hpp"
#include "qvpo/model_io.hpp"

namespace qvpo {

namespace {

constexpr std::uint64_t kEvalStreamBase = 1000;  // rng.split ids for eval rows
constexpr std::uint64_t kCoverageStreamBase = 2000;
constexpr double kCoverageRadius = 0.3;

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

struct EpisodeSlot {
  std::unique_ptr<Env> env;
  Eigen::VectorXd obs;
  double ret = 0.0;
  bool done = false;
};

}  // namespace

EvalResult evaluate(const NoisePredictor& predictor,
                    const DiffusionSchedule& schedule, const TwinCritic& critic,
                    const Env& env_proto, long episodes, int k_eval, Rng rng) {
  if (episodes < 1)
    throw std::invalid_argument("evaluate: episodes must be >= 1");
  std::vector<EpisodeSlot> slots(episodes);
  for (auto& slot : slots) {
    slot.env = env_proto.clone();
    slot.obs = slot.env->reset(rng);
  }

  EvalResult result;
  result.first_actions.reserve(episodes);
  bool first_step = true;
  const Eigen::Index obs_dim = env_proto.spec().obs_dim;
  while (true) {
    std::vector<long> active;
    for (long i = 0; i < episodes; ++i)
      if (!slots[i].done) active.push_back(i);
    if (active.empty()) break;

    Eigen::MatrixXd states(static_cast<Eigen::Index>(active.size()), obs_dim);
    for (std::size_t j = 0; j < active.size(); ++j)
      states.row(static_cast<Eigen::Index>(j)) = slots[active[j]].obs.transpose();
    const Eigen::MatrixXd actions =
        behavior_select_batch(predictor, schedule, critic, states, k_eval, rng,
                              env_proto.spec().bounds);
    for (std::size_t j = 0; j < active.size(); ++j) {
      EpisodeSlot& slot = slots[active[j]];
      const Eigen::VectorXd action =
          actions.row(static_cast<Eigen::Index>(j)).transpose();
      if (first_step) result.first_actions.push_back(action);
      const StepResult sr = slot.env->step(action);
      slot.ret += sr.reward;
      slot.obs = sr.observation;
      slot.done = sr.done;
    }
    first_step = false;
  }

  std::vector<double> returns(episodes);
  double mean = 0.0;
  for (long i = 0; i < episodes; ++i) {
    returns[i] = slots[i].ret;
    mean += slots[i].ret;
  }
  mean /= static_cast<double>(episodes);
  result.mean_return = mean;
  result.std_return = sample_std(returns, mean);
  return result;
}

EvalResult uniform_policy_baseline(const Env& env_proto, long episodes,
                                   Rng rng) {
  if (episodes < 1)
    throw std::invalid_argument("uniform_policy_baseline: episodes must be >= 1");
  EvalResult result;
  std::vector<double> returns;
  returns.reserve(episodes);
  for (long i = 0; i < episodes; ++i) {
    auto env = env_proto.clone();
    env->reset(rng);
    double ret = 0.0;
    bool first = true;
    while (true) {
      const Eigen::VectorXd action = env_proto.spec().bounds.sample_uniform(rng);
      if (first) {
        result.first_actions.push_back(action);
        first = false;
      }
      const StepResult sr = env->step(action);
      ret += sr.reward;
      if (sr.done) break;
    }
    returns.push_back(ret);
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  result.mean_return = mean;
  result.std_return = sample_std(returns, mean);
  return result;
}

std::filesystem::path train(const TrainConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);

  Rng master(config.seed);
  auto env = make_env(config.env, config.bandit_strict_exponent);
  const EnvSpec& spec = env->spec();

  PolicyConfig policy_config;
  policy_config.n_d = config.n_d;
  policy_config.n_e = config.n_e;
  policy_config.k_b = config.k_b;
  policy_config.k_t = config.k_t;
  policy_config.omega_ent = config.omega_ent;
  policy_config.transform = parse_transform(config.transform);
  policy_config.qcut_epsilon = config.qcut_epsilon;
  policy_config.bounds = spec.bounds;
  policy_config.validate();

  NoisePredictor predictor = make_noise_predictor(
      spec.obs_dim, spec.action_dim, config.hidden_dim, master);
  TwinCritic critic =
      make_twin_critic(spec.obs_dim, spec.action_dim, config.hidden_dim, master,
                       config.tau, config.gamma);
  AdamState actor_adam = make_adam(predictor.net, config.actor_lr);
  CriticAdam critic_adam = make_critic_adam(critic, config.critic_lr);
  const DiffusionSchedule schedule =
      build_schedule(config.diffusion_steps, config.beta_min, config.beta_max);
  ReplayBuffer buffer(config.buffer_capacity);

  const bool is_bandit = config.env == "bandit";
  MetricsWriter writer(std::filesystem::path(config.out_dir) / "metrics.csv",
                       is_bandit);

  std::vector<Eigen::Vector2d> peaks;
  if (is_bandit) {
    const auto* bandit = dynamic_cast<const BanditEnv*>(env.get());
    for (const auto& mu : bandit->params().mean) peaks.push_back(mu);
  }

  Eigen::VectorXd obs = env->reset(master);
  long episodes_done = 0;
  double policy_loss = 0.0, critic_loss = 0.0;
  BatchBuildStats stats{};
  std::uint64_t eval_count = 0;

  auto write_eval_row = [&](long step) {
    const Rng eval_rng = master.split(kEvalStreamBase + eval_count);
    const EvalResult ev = evaluate(predictor, schedule, critic, *env,
                                   config.eval_episodes, config.k_eval, eval_rng);
    MetricsRow row;
    row.step = step;
    row.episodes = episodes_done;
    row.eval_return_mean = ev.mean_return;
    row.eval_return_std = ev.std_return;
    row.policy_loss = policy_loss;
    row.critic_loss = critic_loss;
    row.mean_positive_weight = stats.mean_positive_weight;
    row.zero_weight_fraction = stats.zero_weight_fraction;
    if (is_bandit) {
      // Coverage measures the raw policy distribution, not the K-selected
      // evaluation actions: the selection step collapses onto the critic's
      // favorite peak by construction.
      Rng coverage_rng = master.split(kCoverageStreamBase + eval_count);
      Eigen::MatrixXd zero_states(config.eval_episodes, spec.obs_dim);
      zero_states.setZero();
      const Eigen::MatrixXd samples = sample_reverse_batch(
          schedule, predictor, zero_states, coverage_rng, spec.bounds);
      std::vector<Eigen::Vector2d> actions;
      actions.reserve(samples.rows());
      for (Eigen::Index i = 0; i < samples.rows(); ++i)
        actions.emplace_back(samples(i, 0), samples(i, 1));
      row.mode_coverage = mode_coverage(actions, peaks, kCoverageRadius);
    }
    eval_count += 1;
    writer.write(row);
  };

  for (long step = 1; step <= config.total_steps; ++step) {
    const Eigen::VectorXd action =
        step <= config.warmup_steps
            ? spec.bounds.sample_uniform(master)
            : behavior_select(predictor, schedule, critic, obs, config.k_b,
                              master, spec.bounds);
    const StepResult sr = env->step(action);
    // A truncated ending is not an absorbing state: store it as non-terminal
    // so the bootstrap target looks past the time limit.
    buffer.push(
        {obs, action, sr.reward, sr.observation, sr.done && !sr.truncated});
    if (sr.done) {
      episodes_done += 1;
      obs = env->reset(master);
    } else {
      obs = sr.observation;
    }

    if (step > config.warmup_steps) {
      const std::vector<Transition> batch =
          buffer.sample_batch(config.batch_size, master);
      Eigen::MatrixXd states(config.batch_size, spec.obs_dim);
      for (int i = 0; i < config.batch_size; ++i)
        states.row(i) = batch[i].state.transpose();
      const std::vector<WeightedSample> weighted = build_training_batch(
          predictor, schedule, critic, states, policy_config, master, &stats);
      policy_loss =
          policy_update(predictor, actor_adam, schedule, weighted, master);
      const Eigen::VectorXd targets = td_targets(
          critic, predictor, schedule, batch, config.k_t, master, spec.bounds);
      critic_loss = critic_update(critic, critic_adam, batch, targets);
      polyak_update(critic);
    }

    if (step % config.eval_interval == 0 || step == config.total_steps)
      write_eval_row(step);
  }

  ModelBundle bundle;
  bundle.env = config.env;
  bundle.bandit_strict_exponent = config.bandit_strict_exponent;
  bundle.diffusion_steps = config.diffusion_steps;
  bundle.beta_min = config.beta_min;
  bundle.beta_max = config.beta_max;
  bundle.predictor = std::move(predictor);
  bundle.critic = std::move(critic);
  save_model(bundle, std::filesystem::path(config.out_dir) / "model.json");

  return writer.path();
}

}  // namespace qvpo
