#pragma once

#include <filesystem>
#include <vector>

#include "qvpo/config.hpp"
#include "qvpo/critic.hpp"
#include "qvpo/diffusion.hpp"
#include "qvpo/envs.hpp"
#include "qvpo/policy.hpp"
#include "qvpo/rng.hpp"

namespace qvpo {

struct EvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;  // sample std across episodes
  /// First action of each episode; on the single-step bandit these are the
  /// evaluation samples that feed mode coverage.
  std::vector<Eigen::VectorXd> first_actions;
};

/// Runs `episodes` episodes with k-of-K action selection; the prototype env
/// is cloned per episode and episodes advance in lockstep so the selection
/// batches across them. No learning side effects.
EvalResult evaluate(const NoisePredictor& predictor,
                    const DiffusionSchedule& schedule, const TwinCritic& critic,
                    const Env& env_proto, long episodes, int k_eval, Rng rng);

/// Return mean/std of a uniform-random policy, the reference baseline.
EvalResult uniform_policy_baseline(const Env& env_proto, long episodes, Rng rng);

/// Online training loop: act with k_b-selection, store, then per step update
/// the policy on the weighted batch, regress both critics on bootstrap
/// targets built with k_t-selection, and blend the shadows. Writes
/// metrics.csv (one row per eval_interval plus a final row) and model.json
/// under out_dir; returns the metrics path. Deterministic per (config, seed).
std::filesystem::path train(const TrainConfig& config);

}  // namespace qvpo
