#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qvpo/critic.hpp"
#include "qvpo/diffusion.hpp"
#include "qvpo/net.hpp"
#include "qvpo/rng.hpp"

namespace qvpo {

/// Maps raw Q values to nonnegative training weights: qadv clips the
/// advantage at zero, qcut keeps only the best action.
enum class WeightTransform { qadv, qcut };

WeightTransform parse_transform(const std::string& name);
std::string to_string(WeightTransform transform);

struct PolicyConfig {
  int n_d = 64;   // diffusion samples per state
  int n_e = 10;   // uniform samples per state
  int k_b = 4;    // action selection count when acting
  int k_t = 2;    // action selection count for bootstrap targets
  double omega_ent = 0.01;
  WeightTransform transform = WeightTransform::qadv;
  double qcut_epsilon = 1e-6;
  ActionBounds bounds;

  void validate() const;  // throws ConfigError
};

/// n independent reverse-chain draws for one state.
std::vector<Eigen::VectorXd> sample_actions(const NoisePredictor& predictor,
                                            const DiffusionSchedule& schedule,
                                            const Eigen::VectorXd& state, int n,
                                            Rng& rng, const ActionBounds& bounds);

/// weight_i = max(q_i - mean(q), 0).
std::vector<double> qadv_weights(std::span<const double> q_values);

/// Single-support: the argmax index (lowest on ties) gets Q_max when
/// Q_max >= 0 and epsilon otherwise; everything else gets 0.
std::vector<double> qcut_weights(std::span<const double> q_values,
                                 double epsilon);

std::vector<double> transform_weights(const PolicyConfig& config,
                                      std::span<const double> q_values);

struct BatchBuildStats {
  double mean_positive_weight = 0.0;  // over the kept diffusion samples
  double zero_weight_fraction = 0.0;  // states whose best weight is zero
};

/// Training-batch construction: per state draw n_d actions, score them with
/// the online twin minimum, transform to weights, keep the best sample, then
/// attach n_e uniform actions each weighted omega_ent * best_weight. Output
/// order per state: best sample first, then its uniform samples.
std::vector<WeightedSample> build_training_batch(
    const NoisePredictor& predictor, const DiffusionSchedule& schedule,
    const TwinCritic& critic, const Eigen::MatrixXd& states,
    const PolicyConfig& config, Rng& rng, BatchBuildStats* stats = nullptr);

/// One Adam step on the weighted denoising loss over the combined batch;
/// returns the loss before the step.
double policy_update(NoisePredictor& predictor, AdamState& adam,
                     const DiffusionSchedule& schedule,
                     std::span<const WeightedSample> batch, Rng& rng);

/// Draw k actions per state (rows), return per state the one with the best
/// twin-minimum Q; ties break toward the lowest sample index.
Eigen::MatrixXd behavior_select_batch(const NoisePredictor& predictor,
                                      const DiffusionSchedule& schedule,
                                      const TwinCritic& critic,
                                      const Eigen::MatrixXd& states, int k,
                                      Rng& rng, const ActionBounds& bounds,
                                      bool use_shadow = false);

Eigen::VectorXd behavior_select(const NoisePredictor& predictor,
                                const DiffusionSchedule& schedule,
                                const TwinCritic& critic,
                                const Eigen::VectorXd& state, int k, Rng& rng,
                                const ActionBounds& bounds,
                                bool use_shadow = false);

}  // namespace qvpo
