#include <doctest.h>

#include <set>
#include <vector>

#include "qvpo/replay.hpp"

using namespace qvpo;

namespace {

Transition stamped(double id) {
  Transition t;
  t.state = Eigen::VectorXd::Constant(2, id);
  t.action = Eigen::VectorXd::Constant(1, id);
  t.reward = id;
  t.next_state = Eigen::VectorXd::Constant(2, id);
  t.done = false;
  return t;
}

}  // namespace

TEST_SUITE("replay") {

TEST_CASE("push grows the buffer up to capacity") {
  ReplayBuffer buffer(4);
  buffer.push(stamped(1));
  CHECK(buffer.size() == 1);
  buffer.push(stamped(2));
  CHECK(buffer.size() == 2);
}

TEST_CASE("the ring overwrites the oldest entry") {
  ReplayBuffer buffer(2);
  buffer.push(stamped(1));
  buffer.push(stamped(2));
  buffer.push(stamped(3));
  CHECK(buffer.size() == 2);
  std::set<double> contents;
  for (std::size_t i = 0; i < buffer.size(); ++i)
    contents.insert(buffer.at(i).reward);
  CHECK(contents == std::set<double>{2.0, 3.0});
}

TEST_CASE("insertion order survives many wraps") {
  const std::size_t capacity = 1000;
  ReplayBuffer buffer(capacity);
  for (int i = 0; i < 10000; ++i) buffer.push(stamped(i));
  CHECK(buffer.size() == capacity);
  for (std::size_t slot = 0; slot < capacity; ++slot)
    CHECK(buffer.at(slot).reward == 9000.0 + static_cast<double>(slot));
}

TEST_CASE("sampling a single-entry buffer repeats that entry") {
  ReplayBuffer buffer(8);
  buffer.push(stamped(7));
  Rng rng(1);
  const auto batch = buffer.sample_batch(5, rng);
  REQUIRE(batch.size() == 5);
  for (const Transition& t : batch) CHECK(t.reward == 7.0);
}

TEST_CASE("sampling is reproducible per seed") {
  ReplayBuffer buffer(64);
  for (int i = 0; i < 64; ++i) buffer.push(stamped(i));
  Rng rng_a(9), rng_b(9);
  const auto a = buffer.sample_batch(16, rng_a);
  const auto b = buffer.sample_batch(16, rng_b);
  for (int i = 0; i < 16; ++i) CHECK(a[i].reward == b[i].reward);
}

TEST_CASE("sampled indices pass a chi-square uniformity test") {
  const int slots = 100;
  ReplayBuffer buffer(slots);
  for (int i = 0; i < slots; ++i) buffer.push(stamped(i));
  Rng rng(123);
  const int draws = 100000;
  std::vector<int> counts(slots, 0);
  const auto batch = buffer.sample_batch(draws, rng);
  for (const Transition& t : batch) counts[static_cast<int>(t.reward)] += 1;
  const double expected = static_cast<double>(draws) / slots;
  double stat = 0.0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  // chi-square(99) 0.999 quantile
  CHECK(stat < 148.23);
}

TEST_CASE("sampled transitions are copies, not views") {
  ReplayBuffer buffer(4);
  buffer.push(stamped(3));
  Rng rng(2);
  auto batch = buffer.sample_batch(1, rng);
  batch[0].reward = -99.0;
  batch[0].state[0] = -99.0;
  CHECK(buffer.at(0).reward == 3.0);
  CHECK(buffer.at(0).state[0] == 3.0);
}

TEST_CASE("misuse raises") {
  ReplayBuffer buffer(4);
  Rng rng(1);
  CHECK_THROWS_AS(buffer.sample_batch(1, rng), std::invalid_argument);
  buffer.push(stamped(1));
  Transition bad = stamped(2);
  bad.action = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(buffer.push(bad), std::invalid_argument);
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

}  // TEST_SUITE
