#include "ddpglab/replay_buffer.hpp"

#include <stdexcept>

namespace ddpglab {

void Batch::resize(Eigen::Index n) {
  s.resize(n);
  a.resize(n);
  r.resize(n);
  terminal.resize(n);
  s_next.resize(n);
}

void Batch::set(Eigen::Index i, const Transition& tr) {
  s[i] = tr.s;
  a[i] = tr.a;
  r[i] = tr.r;
  terminal[i] = tr.terminal;
  s_next[i] = tr.s_next;
}

Transition Batch::get(Eigen::Index i) const {
  return Transition{s[i], a[i], r[i], terminal[i], s_next[i]};
}

long Batch::rewarded() const {
  return static_cast<long>((r.array() > 0.0).count());
}

Batch Batch::from(const std::vector<Transition>& transitions) {
  Batch b;
  b.resize(static_cast<Eigen::Index>(transitions.size()));
  for (std::size_t i = 0; i < transitions.size(); ++i) b.set(static_cast<Eigen::Index>(i), transitions[i]);
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(const Transition& tr) {
  if (storage_.size() < capacity_) {
    storage_.push_back(tr);
  } else {
    storage_[next_] = tr;
  }
  next_ = (next_ + 1) % capacity_;
  ++pushed_;
}

void ReplayBuffer::sample(std::size_t n, Rng& rng, Batch& out) const {
  if (storage_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  out.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    out.set(static_cast<Eigen::Index>(i), storage_[rng.below(storage_.size())]);
  }
}

Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  Batch b;
  sample(n, rng, b);
  return b;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= storage_.size()) throw std::out_of_range("replay index out of range");
  if (storage_.size() < capacity_) return storage_[i];
  return storage_[(next_ + i) % capacity_];
}

}  // namespace ddpglab
