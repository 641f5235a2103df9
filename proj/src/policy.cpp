#include "qvpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qvpo/errors.hpp"

namespace qvpo {

WeightTransform parse_transform(const std::string& name) {
  if (name == "qadv") return WeightTransform::qadv;
  if (name == "qcut") return WeightTransform::qcut;
  throw ConfigError("unknown transform '" + name + "' (expected qadv or qcut)");
}

std::string to_string(WeightTransform transform) {
  return transform == WeightTransform::qadv ? "qadv" : "qcut";
}

void PolicyConfig::validate() const {
  if (n_d < 1) throw ConfigError("policy config: n_d must be >= 1");
  if (n_e < 0) throw ConfigError("policy config: n_e must be >= 0");
  if (k_b < 1) throw ConfigError("policy config: k_b must be >= 1");
  if (k_t < 1 || k_t > k_b)
    throw ConfigError("policy config: need 1 <= k_t <= k_b");
  if (omega_ent < 0.0) throw ConfigError("policy config: omega_ent must be >= 0");
  if (!(qcut_epsilon > 0.0))
    throw ConfigError("policy config: qcut_epsilon must be > 0");
  if (bounds.low.size() != bounds.high.size() || bounds.low.size() == 0 ||
      (bounds.low.array() >= bounds.high.array()).any())
    throw ConfigError("policy config: need action_low < action_high");
}

std::vector<Eigen::VectorXd> sample_actions(const NoisePredictor& predictor,
                                            const DiffusionSchedule& schedule,
                                            const Eigen::VectorXd& state, int n,
                                            Rng& rng,
                                            const ActionBounds& bounds) {
  if (n < 1) throw std::invalid_argument("sample_actions: n must be >= 1");
  Eigen::MatrixXd states(n, state.size());
  states.rowwise() = state.transpose();
  const Eigen::MatrixXd drawn =
      sample_reverse_batch(schedule, predictor, states, rng, bounds);
  std::vector<Eigen::VectorXd> actions(n);
  for (int i = 0; i < n; ++i) actions[i] = drawn.row(i).transpose();
  return actions;
}

std::vector<double> qadv_weights(std::span<const double> q_values) {
  if (q_values.empty()) throw std::invalid_argument("qadv_weights: empty input");
  const double baseline =
      std::accumulate(q_values.begin(), q_values.end(), 0.0) /
      static_cast<double>(q_values.size());
  std::vector<double> weights(q_values.size());
  for (std::size_t i = 0; i < q_values.size(); ++i)
    weights[i] = std::max(q_values[i] - baseline, 0.0);
  return weights;
}

std::vector<double> qcut_weights(std::span<const double> q_values,
                                 double epsilon) {
  if (q_values.empty()) throw std::invalid_argument("qcut_weights: empty input");
  if (!(epsilon > 0.0))
    throw std::invalid_argument("qcut_weights: epsilon must be > 0");
  std::size_t best = 0;
  for (std::size_t i = 1; i < q_values.size(); ++i)
    if (q_values[i] > q_values[best]) best = i;
  std::vector<double> weights(q_values.size(), 0.0);
  weights[best] = q_values[best] >= 0.0 ? q_values[best] : epsilon;
  return weights;
}

std::vector<double> transform_weights(const PolicyConfig& config,
                                      std::span<const double> q_values) {
  return config.transform == WeightTransform::qadv
             ? qadv_weights(q_values)
             : qcut_weights(q_values, config.qcut_epsilon);
}

std::vector<WeightedSample> build_training_batch(
    const NoisePredictor& predictor, const DiffusionSchedule& schedule,
    const TwinCritic& critic, const Eigen::MatrixXd& states,
    const PolicyConfig& config, Rng& rng, BatchBuildStats* stats) {
  const Eigen::Index n_states = states.rows();
  if (n_states == 0)
    throw std::invalid_argument("build_training_batch: no states");
  const int n_d = config.n_d;

  Eigen::MatrixXd replicated(n_states * n_d, states.cols());
  for (Eigen::Index i = 0; i < n_states; ++i)
    for (int j = 0; j < n_d; ++j)
      replicated.row(i * n_d + j) = states.row(i);

  const Eigen::MatrixXd actions =
      sample_reverse_batch(schedule, predictor, replicated, rng, config.bounds);
  const Eigen::VectorXd q = q_min_batch(critic, replicated, actions);

  std::vector<WeightedSample> batch;
  batch.reserve(static_cast<std::size_t>(n_states) * (1 + config.n_e));
  double positive_sum = 0.0;
  int positive_count = 0;
  int zero_states = 0;

  std::vector<double> group(n_d);
  for (Eigen::Index i = 0; i < n_states; ++i) {
    for (int j = 0; j < n_d; ++j) group[j] = q[i * n_d + j];
    const std::vector<double> weights = transform_weights(config, group);
    std::size_t best = 0;
    for (std::size_t j = 1; j < weights.size(); ++j)
      if (weights[j] > weights[best]) best = j;
    const double best_weight = weights[best];

    WeightedSample kept;
    kept.state = states.row(i).transpose();
    kept.action = actions.row(i * n_d + static_cast<Eigen::Index>(best)).transpose();
    kept.weight = best_weight;
    batch.push_back(std::move(kept));

    if (best_weight > 0.0) {
      positive_sum += best_weight;
      positive_count += 1;
    } else {
      zero_states += 1;
    }

    for (int j = 0; j < config.n_e; ++j) {
      WeightedSample uniform;
      uniform.state = states.row(i).transpose();
      uniform.action = config.bounds.sample_uniform(rng);
      uniform.weight = config.omega_ent * best_weight;
      batch.push_back(std::move(uniform));
    }
  }

  if (stats) {
    stats->mean_positive_weight =
        positive_count > 0 ? positive_sum / positive_count : 0.0;
    stats->zero_weight_fraction =
        static_cast<double>(zero_states) / static_cast<double>(n_states);
  }
  return batch;
}

double policy_update(NoisePredictor& predictor, AdamState& adam,
                     const DiffusionSchedule& schedule,
                     std::span<const WeightedSample> batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("policy_update: empty batch");
  const LossResult result = weighted_ddpm_loss(schedule, predictor, batch, rng);
  if (!std::isfinite(result.loss))
    throw NumericError("policy_update: non-finite loss");
  adam_step(adam, predictor.net, result.grads);
  return result.loss;
}

Eigen::MatrixXd behavior_select_batch(const NoisePredictor& predictor,
                                      const DiffusionSchedule& schedule,
                                      const TwinCritic& critic,
                                      const Eigen::MatrixXd& states, int k,
                                      Rng& rng, const ActionBounds& bounds,
                                      bool use_shadow) {
  if (k < 1) throw std::invalid_argument("behavior_select: k must be >= 1");
  const Eigen::Index n_states = states.rows();
  Eigen::MatrixXd replicated(n_states * k, states.cols());
  for (Eigen::Index i = 0; i < n_states; ++i)
    for (int j = 0; j < k; ++j) replicated.row(i * k + j) = states.row(i);

  const Eigen::MatrixXd candidates =
      sample_reverse_batch(schedule, predictor, replicated, rng, bounds);
  if (k == 1) return candidates;

  const Eigen::VectorXd q =
      q_min_batch(critic, replicated, candidates, use_shadow);
  Eigen::MatrixXd selected(n_states, candidates.cols());
  for (Eigen::Index i = 0; i < n_states; ++i) {
    Eigen::Index best = i * k;
    for (int j = 1; j < k; ++j)
      if (q[i * k + j] > q[best]) best = i * k + j;
    selected.row(i) = candidates.row(best);
  }
  return selected;
}

Eigen::VectorXd behavior_select(const NoisePredictor& predictor,
                                const DiffusionSchedule& schedule,
                                const TwinCritic& critic,
                                const Eigen::VectorXd& state, int k, Rng& rng,
                                const ActionBounds& bounds, bool use_shadow) {
  return behavior_select_batch(predictor, schedule, critic,
                               Eigen::MatrixXd(state.transpose()), k, rng,
                               bounds, use_shadow)
      .row(0)
      .transpose();
}

}  // namespace qvpo
