#include "qvpo/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qvpo/errors.hpp"

namespace qvpo {

DiffusionSchedule build_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1)
    throw ConfigError("build_schedule: steps must be >= 1, got " +
                      std::to_string(steps));
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
    throw ConfigError("build_schedule: need 0 < beta_min <= beta_max < 1");
  DiffusionSchedule s;
  s.beta.resize(steps);
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  s.sigma.resize(steps);
  double running = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    s.beta[i] = beta_min + (beta_max - beta_min) * frac;
    s.alpha[i] = 1.0 - s.beta[i];
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
    s.sigma[i] = std::sqrt(s.beta[i]);
  }
  return s;
}

NoisePredictor make_noise_predictor(Eigen::Index obs_dim,
                                    Eigen::Index action_dim,
                                    Eigen::Index hidden_dim, Rng& rng,
                                    Eigen::Index time_embed_dim) {
  if (time_embed_dim % 2 != 0)
    throw std::invalid_argument("make_noise_predictor: embedding dim must be even");
  NoisePredictor p;
  p.obs_dim = obs_dim;
  p.action_dim = action_dim;
  p.time_embed_dim = time_embed_dim;
  p.net = make_mlp(action_dim + obs_dim + time_embed_dim,
                   {hidden_dim, hidden_dim}, action_dim, rng);
  return p;
}

Eigen::VectorXd time_embedding(int t, Eigen::Index dim) {
  if (dim % 2 != 0) throw std::invalid_argument("time_embedding: dim must be even");
  const Eigen::Index half = dim / 2;
  Eigen::VectorXd emb(dim);
  for (Eigen::Index k = 0; k < half; ++k) {
    const double freq =
        half > 1 ? std::exp(-std::log(1e4) * static_cast<double>(k) /
                            static_cast<double>(half - 1))
                 : 1.0;
    emb[2 * k] = std::sin(t * freq);
    emb[2 * k + 1] = std::cos(t * freq);
  }
  return emb;
}

Eigen::MatrixXd predictor_inputs(const NoisePredictor& predictor,
                                 const Eigen::MatrixXd& noisy_actions,
                                 const Eigen::MatrixXd& states,
                                 std::span<const int> ts) {
  const Eigen::Index n = noisy_actions.rows();
  if (states.rows() != n || static_cast<Eigen::Index>(ts.size()) != n)
    throw std::invalid_argument("predictor_inputs: row count mismatch");
  if (noisy_actions.cols() != predictor.action_dim ||
      states.cols() != predictor.obs_dim)
    throw std::invalid_argument("predictor_inputs: column dimension mismatch");
  Eigen::MatrixXd inputs(n, predictor.action_dim + predictor.obs_dim +
                                predictor.time_embed_dim);
  inputs.leftCols(predictor.action_dim) = noisy_actions;
  inputs.middleCols(predictor.action_dim, predictor.obs_dim) = states;
  // Embeddings depend only on t, so compute each distinct step once.
  int t_max = 0;
  for (int t : ts) t_max = std::max(t_max, t);
  std::vector<Eigen::RowVectorXd> table(t_max + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd& emb = table[ts[i]];
    if (emb.size() == 0)
      emb = time_embedding(ts[i], predictor.time_embed_dim).transpose();
    inputs.row(i).tail(predictor.time_embed_dim) = emb;
  }
  return inputs;
}

Eigen::VectorXd predict_noise(const NoisePredictor& predictor,
                              const Eigen::VectorXd& noisy_action,
                              const Eigen::VectorXd& state, int t) {
  const int ts[1] = {t};
  return forward_batch(predictor.net,
                       predictor_inputs(predictor,
                                  Eigen::MatrixXd(noisy_action.transpose()),
                                  Eigen::MatrixXd(state.transpose()), ts))
      .row(0)
      .transpose();
}

namespace {

void check_step(const DiffusionSchedule& schedule, int t, const char* who) {
  if (t < 1 || t > schedule.steps())
    throw std::invalid_argument(std::string(who) + ": step t=" +
                                std::to_string(t) + " outside [1, " +
                                std::to_string(schedule.steps()) + "]");
}

}  // namespace

Eigen::VectorXd forward_noise(const DiffusionSchedule& schedule,
                              const Eigen::VectorXd& a0, int t,
                              const Eigen::VectorXd& eps) {
  check_step(schedule, t, "forward_noise");
  if (eps.size() != a0.size())
    throw std::invalid_argument("forward_noise: eps dimension mismatch");
  const double abar = schedule.alpha_bar[t - 1];
  return std::sqrt(abar) * a0 + std::sqrt(1.0 - abar) * eps;
}

Eigen::MatrixXd sample_reverse_batch(const DiffusionSchedule& schedule,
                                     const NoisePredictor& predictor,
                                     const Eigen::MatrixXd& states, Rng& rng,
                                     const ActionBounds& bounds) {
  const Eigen::Index n = states.rows();
  if (states.cols() != predictor.obs_dim)
    throw std::invalid_argument("sample_reverse: state dimension mismatch");
  if (bounds.dim() != predictor.action_dim)
    throw std::invalid_argument("sample_reverse: bounds dimension mismatch");
  Eigen::MatrixXd actions = rng.normal_matrix(n, predictor.action_dim);
  std::vector<int> ts(n);
  for (int t = schedule.steps(); t >= 1; --t) {
    std::fill(ts.begin(), ts.end(), t);
    const Eigen::MatrixXd eps_hat = forward_batch(
        predictor.net, predictor_inputs(predictor, actions, states, ts));
    const double beta = schedule.beta[t - 1];
    const double abar = schedule.alpha_bar[t - 1];
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha[t - 1]);
    // beta = 0 means no noise was added at this step; the removal
    // coefficient's 0/0 limit is 0.
    const double removal = abar < 1.0 ? beta / std::sqrt(1.0 - abar) : 0.0;
    actions = inv_sqrt_alpha * (actions - removal * eps_hat);
    if (t > 1)
      actions += schedule.sigma[t - 1] *
                 rng.normal_matrix(n, predictor.action_dim);
    if (!actions.allFinite())
      throw NumericError("sample_reverse: non-finite action at diffusion step t=" +
                         std::to_string(t));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    actions.row(i) = actions.row(i)
                         .cwiseMax(bounds.low.transpose())
                         .cwiseMin(bounds.high.transpose());
  return actions;
}

Eigen::VectorXd sample_reverse(const DiffusionSchedule& schedule,
                               const NoisePredictor& predictor,
                               const Eigen::VectorXd& state, Rng& rng,
                               const ActionBounds& bounds) {
  return sample_reverse_batch(schedule, predictor,
                              Eigen::MatrixXd(state.transpose()), rng, bounds)
      .row(0)
      .transpose();
}

std::vector<NoiseDraw> draw_noise(const DiffusionSchedule& schedule,
                                  Eigen::Index action_dim, std::size_t count,
                                  Rng& rng) {
  std::vector<NoiseDraw> draws(count);
  for (auto& d : draws) {
    d.t = static_cast<int>(rng.uniform_int(1, schedule.steps()));
    d.eps = rng.normal_vector(action_dim);
  }
  return draws;
}

double weighted_loss_with_draws(const DiffusionSchedule& schedule,
                                const NoisePredictor& predictor,
                                std::span<const WeightedSample> batch,
                                std::span<const NoiseDraw> draws,
                                LayerGrads& grads) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) throw std::invalid_argument("weighted loss: empty batch");
  if (draws.size() != batch.size())
    throw std::invalid_argument("weighted loss: one draw per sample required");
  Eigen::MatrixXd noisy(n, predictor.action_dim);
  Eigen::MatrixXd states(n, predictor.obs_dim);
  Eigen::MatrixXd eps(n, predictor.action_dim);
  std::vector<int> ts(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const WeightedSample& s = batch[i];
    if (s.weight < 0.0)
      throw std::invalid_argument("weighted loss: negative weight at sample " +
                                  std::to_string(i));
    check_step(schedule, draws[i].t, "weighted loss");
    noisy.row(i) =
        forward_noise(schedule, s.action, draws[i].t, draws[i].eps).transpose();
    states.row(i) = s.state.transpose();
    eps.row(i) = draws[i].eps.transpose();
    ts[i] = draws[i].t;
  }
  ForwardTrace trace;
  const Eigen::MatrixXd eps_hat = forward_batch(
      predictor.net, predictor_inputs(predictor, noisy, states, ts), trace);
  const Eigen::MatrixXd residual = eps_hat - eps;
  double loss = 0.0;
  Eigen::MatrixXd upstream(n, predictor.action_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = batch[i].weight;
    loss += w * residual.row(i).squaredNorm();
    upstream.row(i) = (2.0 * w / static_cast<double>(n)) * residual.row(i);
  }
  loss /= static_cast<double>(n);
  backward_batch(predictor.net, trace, upstream, grads);
  return loss;
}

LossResult weighted_ddpm_loss(const DiffusionSchedule& schedule,
                              const NoisePredictor& predictor,
                              std::span<const WeightedSample> batch, Rng& rng) {
  LossResult result;
  result.grads = zero_grads(predictor.net);
  const auto draws =
      draw_noise(schedule, predictor.action_dim, batch.size(), rng);
  result.loss =
      weighted_loss_with_draws(schedule, predictor, batch, draws, result.grads);
  return result;
}

}  // namespace qvpo
