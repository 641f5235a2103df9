#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "qvpo/rng.hpp"

namespace qvpo {

/// One environment step.
struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

/// Fixed-capacity ring buffer. Once full, new entries overwrite the oldest
/// slot; sampling is uniform with replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition transition);

  /// n uniform-with-replacement draws; requires a nonempty buffer.
  std::vector<Transition> sample_batch(std::size_t n, Rng& rng) const;

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;  // next slot to write
  Eigen::Index obs_dim_ = -1;
  Eigen::Index action_dim_ = -1;
  std::vector<Transition> storage_;
};

}  // namespace qvpo
