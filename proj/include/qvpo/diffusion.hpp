#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "qvpo/bounds.hpp"
#include "qvpo/net.hpp"
#include "qvpo/rng.hpp"

namespace qvpo {

/// Variance schedule tables. Entry i corresponds to diffusion step t = i + 1.
struct DiffusionSchedule {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;      // 1 - beta
  Eigen::VectorXd alpha_bar;  // running product of alpha
  Eigen::VectorXd sigma;      // reverse-step noise scale, sigma^2 = beta

  int steps() const { return static_cast<int>(beta.size()); }
};

/// Linear beta schedule from beta_min to beta_max over `steps` steps.
DiffusionSchedule build_schedule(int steps, double beta_min = 1e-4,
                                 double beta_max = 0.02);

/// Noise-prediction network for the conditional denoiser. Input layout is
/// [noisy action, state, sinusoidal step embedding].
struct NoisePredictor {
  Mlp net;
  Eigen::Index obs_dim = 0;
  Eigen::Index action_dim = 0;
  Eigen::Index time_embed_dim = 16;
};

NoisePredictor make_noise_predictor(Eigen::Index obs_dim,
                                    Eigen::Index action_dim,
                                    Eigen::Index hidden_dim, Rng& rng,
                                    Eigen::Index time_embed_dim = 16);

/// Sinusoidal embedding of a diffusion step index; dim must be even.
Eigen::VectorXd time_embedding(int t, Eigen::Index dim);

/// Stacks [noisy_actions | states | embedding(t_i)] rows for the predictor
/// network. `ts` holds one step index per row.
Eigen::MatrixXd predictor_inputs(const NoisePredictor& predictor,
                                 const Eigen::MatrixXd& noisy_actions,
                                 const Eigen::MatrixXd& states,
                                 std::span<const int> ts);

Eigen::VectorXd predict_noise(const NoisePredictor& predictor,
                              const Eigen::VectorXd& noisy_action,
                              const Eigen::VectorXd& state, int t);

/// Closed-form noisy action at step t: sqrt(abar_t) a0 + sqrt(1 - abar_t) eps.
Eigen::VectorXd forward_noise(const DiffusionSchedule& schedule,
                              const Eigen::VectorXd& a0, int t,
                              const Eigen::VectorXd& eps);

/// Full reverse chain for a batch of states (one action per row). Starts
/// from standard normal noise, then for t = T..1 applies
///   a_{t-1} = (a_t - beta_t / sqrt(1 - abar_t) * eps_hat) / sqrt(alpha_t)
///             + sigma_t z,
/// with z drawn only for t > 1. The final action is clamped to bounds.
Eigen::MatrixXd sample_reverse_batch(const DiffusionSchedule& schedule,
                                     const NoisePredictor& predictor,
                                     const Eigen::MatrixXd& states, Rng& rng,
                                     const ActionBounds& bounds);

Eigen::VectorXd sample_reverse(const DiffusionSchedule& schedule,
                               const NoisePredictor& predictor,
                               const Eigen::VectorXd& state, Rng& rng,
                               const ActionBounds& bounds);

/// One training pair for the weighted denoising loss.
struct WeightedSample {
  Eigen::VectorXd state;
  Eigen::VectorXd action;  // target a0
  double weight = 0.0;     // nonnegative
};

/// Frozen (t, eps) draw for one sample; lets the loss be evaluated
/// deterministically (finite-difference checks need this).
struct NoiseDraw {
  int t = 1;
  Eigen::VectorXd eps;
};

std::vector<NoiseDraw> draw_noise(const DiffusionSchedule& schedule,
                                  Eigen::Index action_dim, std::size_t count,
                                  Rng& rng);

/// Mean over the batch of w_i * ||eps_i - eps_hat(x_i, s_i, t_i)||^2 with the
/// given frozen draws. Analytic parameter gradients are accumulated into
/// `grads`. Throws on negative weights.
double weighted_loss_with_draws(const DiffusionSchedule& schedule,
                                const NoisePredictor& predictor,
                                std::span<const WeightedSample> batch,
                                std::span<const NoiseDraw> draws,
                                LayerGrads& grads);

struct LossResult {
  double loss = 0.0;
  LayerGrads grads;
};

/// Same loss with t ~ U[1, T] and eps ~ N(0, I) drawn per sample.
LossResult weighted_ddpm_loss(const DiffusionSchedule& schedule,
                              const NoisePredictor& predictor,
                              std::span<const WeightedSample> batch, Rng& rng);

}  // namespace qvpo
