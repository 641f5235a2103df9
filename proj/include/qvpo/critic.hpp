#pragma once

#include <span>

#include <Eigen/Core>

#include "qvpo/diffusion.hpp"
#include "qvpo/net.hpp"
#include "qvpo/replay.hpp"
#include "qvpo/rng.hpp"

namespace qvpo {

/// Two independent Q networks with shadow (target) copies. The pointwise
/// minimum of the pair is used for every policy and critic decision.
struct TwinCritic {
  Mlp q1;
  Mlp q2;
  Mlp q1_shadow;
  Mlp q2_shadow;
  double tau = 0.005;
  double gamma = 0.99;

  Eigen::Index obs_dim = 0;
  Eigen::Index action_dim = 0;
};

/// Networks map [state, action] to a scalar; shadows start as exact copies.
TwinCritic make_twin_critic(Eigen::Index obs_dim, Eigen::Index action_dim,
                            Eigen::Index hidden_dim, Rng& rng,
                            double tau = 0.005, double gamma = 0.99);

/// Batched single-network evaluation; rows of states/actions are paired.
Eigen::VectorXd q_values(const Mlp& q, const Eigen::MatrixXd& states,
                         const Eigen::MatrixXd& actions);

double q_min(const TwinCritic& critic, const Eigen::VectorXd& state,
             const Eigen::VectorXd& action);
double q_min_shadow(const TwinCritic& critic, const Eigen::VectorXd& state,
                    const Eigen::VectorXd& action);

/// min(Q1, Q2) per row, online or shadow pair.
Eigen::VectorXd q_min_batch(const TwinCritic& critic,
                            const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& actions,
                            bool shadow = false);

/// One-step bootstrap target: r if the transition is terminal, otherwise
/// r + gamma * max over k_target sampled next actions of the shadow minimum
/// Q at the next state.
double td_target(const TwinCritic& critic, const NoisePredictor& predictor,
                 const DiffusionSchedule& schedule, const Transition& transition,
                 int k_target, Rng& rng, const ActionBounds& bounds);

/// Batched targets for a replay mini-batch (next actions for all non-terminal
/// rows are sampled in one pass).
Eigen::VectorXd td_targets(const TwinCritic& critic,
                           const NoisePredictor& predictor,
                           const DiffusionSchedule& schedule,
                           std::span<const Transition> batch, int k_target,
                           Rng& rng, const ActionBounds& bounds);

struct CriticAdam {
  AdamState q1;
  AdamState q2;
};

CriticAdam make_critic_adam(const TwinCritic& critic, double lr = 3e-4);

/// One Adam step moving each network toward the targets under MSE; returns
/// the mean of the two losses.
double critic_update(TwinCritic& critic, CriticAdam& adam,
                     std::span<const Transition> batch,
                     const Eigen::VectorXd& targets);

/// shadow <- tau * online + (1 - tau) * shadow, parameter-wise.
void polyak_update(TwinCritic& critic);

}  // namespace qvpo
