#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "ddpglab/env.hpp"
#include "ddpglab/rng.hpp"

namespace ddpglab {

/// Structure-of-arrays minibatch; row vectors so they stack straight into
/// network inputs.
struct Batch {
  Eigen::RowVectorXd s, a, r, terminal, s_next;

  Eigen::Index size() const { return s.size(); }
  void resize(Eigen::Index n);
  void set(Eigen::Index i, const Transition& tr);
  Transition get(Eigen::Index i) const;
  long rewarded() const;

  static Batch from(const std::vector<Transition>& transitions);
};

/// Bounded FIFO of transitions. Storage grows on demand up to `capacity`,
/// after which the oldest entry is overwritten.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& tr);

  /// Uniform sampling with replacement. Throws std::logic_error when empty.
  void sample(std::size_t n, Rng& rng, Batch& out) const;
  Batch sample(std::size_t n, Rng& rng) const;

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return storage_.empty(); }
  std::size_t total_pushed() const { return pushed_; }

  /// i-th element in age order, 0 being the oldest still stored.
  const Transition& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t next_ = 0;
  std::size_t pushed_ = 0;
};

}  // namespace ddpglab
