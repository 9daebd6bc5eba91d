#include "pidtune/replay.hpp"

#include <numeric>
#include <stdexcept>
#include <utility>

namespace pidtune {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay: capacity must be positive");
}

void ReplayBuffer::push(Experience e) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(e));
}

std::vector<Experience> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (batch_size > items_.size())
    throw std::invalid_argument("replay: batch larger than stored experience");
  // Partial Fisher-Yates over an index array: uniform, without replacement.
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Experience> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
    batch.push_back(items_[idx[i]]);
  }
  return batch;
}

}  // namespace pidtune
