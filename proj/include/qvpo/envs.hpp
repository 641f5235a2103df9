#pragma once

#include <array>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "qvpo/bounds.hpp"
#include "qvpo/rng.hpp"

namespace qvpo {

struct EnvSpec {
  Eigen::Index obs_dim = 0;
  Eigen::Index action_dim = 0;
  ActionBounds bounds;
  int horizon = 1;
};

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
  /// True when the episode ended only because the horizon ran out; such
  /// endings are not absorbing states and value bootstrapping should look
  /// past them.
  bool truncated = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual Eigen::VectorXd reset(Rng& rng) = 0;
  virtual StepResult step(const Eigen::VectorXd& action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
};

/// Three-peak reward surface over the [-2, 2]^2 action box.
struct BanditParams {
  std::array<double, 3> weight{1.5, 1.5, 1.5};
  std::array<double, 3> sigma{0.1, 0.1, 0.1};
  std::array<Eigen::Vector2d, 3> mean{Eigen::Vector2d(-1.35, 0.65),
                                      Eigen::Vector2d(-0.65, 1.35),
                                      Eigen::Vector2d(-1.61, 1.61)};
  /// The reward's exponent divides the squared distance by 2*sigma; the
  /// strict variant divides by 2*sigma^2 instead (a narrower peak), kept as
  /// a switch for sensitivity checks.
  bool strict_gaussian_exponent = false;
};

double bandit_reward(const BanditParams& params, const Eigen::Vector2d& x);

/// Single-step MDP: the observation is the constant [0], an episode is one
/// 2-D action scored by bandit_reward.
class BanditEnv : public Env {
 public:
  explicit BanditEnv(BanditParams params = {});
  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(Rng& rng) override;
  StepResult step(const Eigen::VectorXd& action) override;
  std::unique_ptr<Env> clone() const override;
  const BanditParams& params() const { return params_; }

 private:
  BanditParams params_;
  EnvSpec spec_;
};

/// Torque-limited pendulum swing-up, horizon 200. Observation is
/// [cos theta, sin theta, theta_dot]; theta = 0 is upright.
class PendulumEnv : public Env {
 public:
  PendulumEnv();
  const EnvSpec& spec() const override { return spec_; }
  Eigen::VectorXd reset(Rng& rng) override;
  StepResult step(const Eigen::VectorXd& action) override;
  std::unique_ptr<Env> clone() const override;

  /// Exposed for tests that pin specific dynamics states.
  void set_state(double theta, double theta_dot);
  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }

  static double wrap_angle(double theta);  // maps into (-pi, pi]

 private:
  Eigen::VectorXd observation() const;

  EnvSpec spec_;
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
  int steps_taken_ = 0;
};

/// Factory for the built-in environments ("bandit" | "pendulum").
std::unique_ptr<Env> make_env(const std::string& name,
                              bool bandit_strict_exponent = false);

}  // namespace qvpo
