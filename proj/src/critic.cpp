#include "qvpo/critic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qvpo/errors.hpp"

namespace qvpo {

TwinCritic make_twin_critic(Eigen::Index obs_dim, Eigen::Index action_dim,
                            Eigen::Index hidden_dim, Rng& rng, double tau,
                            double gamma) {
  if (!(tau > 0.0 && tau <= 1.0) || !(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("make_twin_critic: need 0 < tau <= 1, 0 <= gamma < 1");
  TwinCritic critic;
  critic.tau = tau;
  critic.gamma = gamma;
  critic.obs_dim = obs_dim;
  critic.action_dim = action_dim;
  critic.q1 = make_mlp(obs_dim + action_dim, {hidden_dim, hidden_dim}, 1, rng);
  critic.q2 = make_mlp(obs_dim + action_dim, {hidden_dim, hidden_dim}, 1, rng);
  critic.q1_shadow = critic.q1;
  critic.q2_shadow = critic.q2;
  return critic;
}

namespace {

Eigen::MatrixXd join_rows(const Eigen::MatrixXd& states,
                          const Eigen::MatrixXd& actions) {
  if (states.rows() != actions.rows())
    throw std::invalid_argument("critic: state/action row count mismatch");
  Eigen::MatrixXd joined(states.rows(), states.cols() + actions.cols());
  joined.leftCols(states.cols()) = states;
  joined.rightCols(actions.cols()) = actions;
  return joined;
}

}  // namespace

Eigen::VectorXd q_values(const Mlp& q, const Eigen::MatrixXd& states,
                         const Eigen::MatrixXd& actions) {
  return forward_batch(q, join_rows(states, actions)).col(0);
}

Eigen::VectorXd q_min_batch(const TwinCritic& critic,
                            const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& actions, bool shadow) {
  const Eigen::MatrixXd joined = join_rows(states, actions);
  const Eigen::VectorXd a =
      forward_batch(shadow ? critic.q1_shadow : critic.q1, joined).col(0);
  const Eigen::VectorXd b =
      forward_batch(shadow ? critic.q2_shadow : critic.q2, joined).col(0);
  return a.cwiseMin(b);
}

double q_min(const TwinCritic& critic, const Eigen::VectorXd& state,
             const Eigen::VectorXd& action) {
  return q_min_batch(critic, state.transpose(), action.transpose(), false)[0];
}

double q_min_shadow(const TwinCritic& critic, const Eigen::VectorXd& state,
                    const Eigen::VectorXd& action) {
  return q_min_batch(critic, state.transpose(), action.transpose(), true)[0];
}

Eigen::VectorXd td_targets(const TwinCritic& critic,
                           const NoisePredictor& predictor,
                           const DiffusionSchedule& schedule,
                           std::span<const Transition> batch, int k_target,
                           Rng& rng, const ActionBounds& bounds) {
  if (k_target < 1)
    throw std::invalid_argument("td_targets: k_target must be >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  Eigen::VectorXd targets(n);
  std::vector<Eigen::Index> pending;  // indices that need a bootstrap value
  for (Eigen::Index i = 0; i < n; ++i) {
    targets[i] = batch[i].reward;
    if (!batch[i].done) pending.push_back(i);
  }
  if (pending.empty()) return targets;

  const Eigen::Index m = static_cast<Eigen::Index>(pending.size());
  Eigen::MatrixXd next_states(m * k_target, critic.obs_dim);
  for (Eigen::Index j = 0; j < m; ++j)
    for (int k = 0; k < k_target; ++k)
      next_states.row(j * k_target + k) = batch[pending[j]].next_state.transpose();

  const Eigen::MatrixXd candidates =
      sample_reverse_batch(schedule, predictor, next_states, rng, bounds);
  const Eigen::VectorXd q =
      q_min_batch(critic, next_states, candidates, /*shadow=*/true);
  for (Eigen::Index j = 0; j < m; ++j) {
    // Selection and evaluation both use the shadow minimum, so the
    // bootstrap value is the max of the candidates' scores.
    double best = q[j * k_target];
    for (int k = 1; k < k_target; ++k)
      best = std::max(best, q[j * k_target + k]);
    targets[pending[j]] += critic.gamma * best;
  }
  return targets;
}

double td_target(const TwinCritic& critic, const NoisePredictor& predictor,
                 const DiffusionSchedule& schedule, const Transition& transition,
                 int k_target, Rng& rng, const ActionBounds& bounds) {
  const Transition batch[1] = {transition};
  return td_targets(critic, predictor, schedule, batch, k_target, rng, bounds)[0];
}

CriticAdam make_critic_adam(const TwinCritic& critic, double lr) {
  return {make_adam(critic.q1, lr), make_adam(critic.q2, lr)};
}

double critic_update(TwinCritic& critic, CriticAdam& adam,
                     std::span<const Transition> batch,
                     const Eigen::VectorXd& targets) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw std::invalid_argument("critic_update: empty batch");
  if (targets.size() != n)
    throw std::invalid_argument("critic_update: batch/target length mismatch");
  Eigen::MatrixXd states(n, critic.obs_dim);
  Eigen::MatrixXd actions(n, critic.action_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    states.row(i) = batch[i].state.transpose();
    actions.row(i) = batch[i].action.transpose();
  }
  const Eigen::MatrixXd joined = join_rows(states, actions);

  auto update_one = [&](Mlp& q, AdamState& state) {
    ForwardTrace trace;
    const Eigen::VectorXd pred = forward_batch(q, joined, trace).col(0);
    const Eigen::VectorXd residual = pred - targets;
    const double loss = residual.squaredNorm() / static_cast<double>(n);
    LayerGrads grads = zero_grads(q);
    const Eigen::MatrixXd upstream =
        (2.0 / static_cast<double>(n)) * residual;
    backward_batch(q, trace, upstream, grads);
    adam_step(state, q, grads);
    return loss;
  };
  const double loss1 = update_one(critic.q1, adam.q1);
  const double loss2 = update_one(critic.q2, adam.q2);
  const double loss = 0.5 * (loss1 + loss2);
  if (!std::isfinite(loss))
    throw NumericError("critic_update: non-finite loss");
  return loss;
}

void polyak_update(TwinCritic& critic) {
  auto blend = [tau = critic.tau](Mlp& shadow, const Mlp& online) {
    for (std::size_t l = 0; l < online.layers.size(); ++l) {
      shadow.layers[l].w =
          tau * online.layers[l].w + (1.0 - tau) * shadow.layers[l].w;
      shadow.layers[l].b =
          tau * online.layers[l].b + (1.0 - tau) * shadow.layers[l].b;
    }
  };
  blend(critic.q1_shadow, critic.q1);
  blend(critic.q2_shadow, critic.q2);
}

}  // namespace qvpo
