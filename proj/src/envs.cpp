#include "qvpo/envs.hpp"

#include <cmath>
#include <stdexcept>

#include "qvpo/errors.hpp"

namespace qvpo {

double bandit_reward(const BanditParams& params, const Eigen::Vector2d& x) {
  double reward = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double s = params.sigma[i];
    const double d2 = (x - params.mean[i]).squaredNorm();
    const double denom = params.strict_gaussian_exponent ? 2.0 * s * s : 2.0 * s;
    reward += params.weight[i] / (2.0 * M_PI * s * s) * std::exp(-d2 / denom);
  }
  return reward;
}

BanditEnv::BanditEnv(BanditParams params) : params_(params) {
  spec_.obs_dim = 1;
  spec_.action_dim = 2;
  spec_.bounds = ActionBounds::symmetric(2, 2.0);
  spec_.horizon = 1;
}

Eigen::VectorXd BanditEnv::reset(Rng&) { return Eigen::VectorXd::Zero(1); }

StepResult BanditEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != 2)
    throw std::invalid_argument("BanditEnv::step: action must be 2-D");
  StepResult result;
  result.observation = Eigen::VectorXd::Zero(1);
  result.reward = bandit_reward(params_, Eigen::Vector2d(action[0], action[1]));
  result.done = true;
  return result;
}

std::unique_ptr<Env> BanditEnv::clone() const {
  return std::make_unique<BanditEnv>(*this);
}

namespace {
constexpr double kGravity = 10.0;
constexpr double kMass = 1.0;
constexpr double kLength = 1.0;
constexpr double kDt = 0.05;
constexpr double kMaxTorque = 2.0;
constexpr double kMaxSpeed = 8.0;
constexpr int kPendulumHorizon = 200;
}  // namespace

PendulumEnv::PendulumEnv() {
  spec_.obs_dim = 3;
  spec_.action_dim = 1;
  spec_.bounds = ActionBounds::symmetric(1, kMaxTorque);
  spec_.horizon = kPendulumHorizon;
}

double PendulumEnv::wrap_angle(double theta) {
  double m = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (m <= 0.0) m += 2.0 * M_PI;
  return m - M_PI;
}

Eigen::VectorXd PendulumEnv::observation() const {
  Eigen::VectorXd obs(3);
  obs << std::cos(theta_), std::sin(theta_), theta_dot_;
  return obs;
}

Eigen::VectorXd PendulumEnv::reset(Rng& rng) {
  theta_ = rng.uniform(-M_PI, M_PI);
  theta_dot_ = rng.uniform(-1.0, 1.0);
  steps_taken_ = 0;
  return observation();
}

void PendulumEnv::set_state(double theta, double theta_dot) {
  theta_ = theta;
  theta_dot_ = theta_dot;
  steps_taken_ = 0;
}

StepResult PendulumEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != 1)
    throw std::invalid_argument("PendulumEnv::step: action must be 1-D");
  const double torque = std::clamp(action[0], -kMaxTorque, kMaxTorque);

  // Cost on the pre-step state, matching the usual swing-up convention.
  const double angle = wrap_angle(theta_);
  const double cost =
      angle * angle + 0.1 * theta_dot_ * theta_dot_ + 0.001 * torque * torque;

  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                       3.0 / (kMass * kLength * kLength) * torque;
  theta_dot_ = std::clamp(theta_dot_ + accel * kDt, -kMaxSpeed, kMaxSpeed);
  theta_ += theta_dot_ * kDt;
  if (!std::isfinite(theta_) || !std::isfinite(theta_dot_))
    throw NumericError("PendulumEnv::step: non-finite state");
  steps_taken_ += 1;

  StepResult result;
  result.observation = observation();
  result.reward = -cost;
  result.done = steps_taken_ >= kPendulumHorizon;
  result.truncated = result.done;  // the horizon is a time limit, not a terminal
  return result;
}

std::unique_ptr<Env> PendulumEnv::clone() const {
  return std::make_unique<PendulumEnv>(*this);
}

std::unique_ptr<Env> make_env(const std::string& name,
                              bool bandit_strict_exponent) {
  if (name == "bandit") {
    BanditParams params;
    params.strict_gaussian_exponent = bandit_strict_exponent;
    return std::make_unique<BanditEnv>(params);
  }
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  throw ConfigError("unknown environment '" + name +
                    "' (expected bandit or pendulum)");
}

}  // namespace qvpo
