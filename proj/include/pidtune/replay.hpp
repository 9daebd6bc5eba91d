#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "pidtune/env.hpp"
#include "pidtune/rng.hpp"

namespace pidtune {

/// Bounded FIFO experience store; oldest entries are evicted first.
/// Batches are drawn uniformly without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<Experience>& items() const { return items_; }

  std::vector<Experience> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Experience> items_;
};

}  // namespace pidtune
