#include "qvpo/replay.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qvpo {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition transition) {
  if (obs_dim_ < 0) {
    obs_dim_ = transition.state.size();
    action_dim_ = transition.action.size();
  }
  if (transition.state.size() != obs_dim_ ||
      transition.next_state.size() != obs_dim_ ||
      transition.action.size() != action_dim_)
    throw std::invalid_argument("ReplayBuffer::push: dimension mismatch");
  if (!std::isfinite(transition.reward))
    throw std::invalid_argument("ReplayBuffer::push: non-finite reward");
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(transition));
  } else {
    storage_[cursor_] = std::move(transition);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<Transition> ReplayBuffer::sample_batch(std::size_t n,
                                                   Rng& rng) const {
  if (storage_.empty())
    throw std::invalid_argument("ReplayBuffer::sample_batch: empty buffer");
  std::vector<Transition> batch;
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(storage_.size()) - 1));
    batch.push_back(storage_[idx]);
  }
  return batch;
}

}  // namespace qvpo
