#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "drsrl/actions.hpp"
#include "drsrl/policy.hpp"
#include "drsrl/random.hpp"

namespace drsrl {

/// One AV step as stored by the learner.
struct Transition {
  AgentInput input;
  ActionMask mask;
  std::vector<double> task_logits;  // safety-model input recorded at rollout time
  std::size_t action = 0;
  double r_task = 0.0;
  double r_safe = 0.0;
  AgentInput next_input;
  ActionMask next_mask;
  double risk = 0.0;   // scene risk tau_t
  double alpha = 0.0;  // safety weight alpha_t
  double logp_task = 0.0;
  double logp_safe = 0.0;
  double value_task = 0.0;
  double value_safe = 0.0;
  bool done = false;

  // Filled by advantage estimation before an update phase.
  double adv_task = 0.0;
  double ret_task = 0.0;
  double adv_safe = 0.0;
  double ret_safe = 0.0;

  std::uint32_t episode = 0;
  std::uint32_t agent = 0;
  std::uint32_t step = 0;
};

/// FIFO replay with proportional prioritization: P(i) = p_i^kappa / sum_j p_j^kappa.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, double kappa = 1.0, double is_exponent = 0.5);

  void push(Transition t, double priority);
  void clear();
  /// Drops the `n` oldest transitions (all of them when n >= size()).
  void evict_oldest(std::size_t n);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_.at(i); }
  Transition& at(std::size_t i) { return items_.at(i); }

  /// Sets the stored priority of transition i to its risk value.
  void update_priority(std::size_t i, double risk);
  double priority(std::size_t i) const { return priorities_.at(i); }

  std::vector<double> probabilities() const;

  struct Batch {
    std::vector<std::size_t> indices;
    std::vector<double> weights;  // importance weights, max-normalized to 1
  };

  /// Draws `batch_size` indices with replacement.
  Batch sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::vector<double> scaled() const;

  std::size_t capacity_;
  double kappa_;
  double is_exponent_;
  std::deque<Transition> items_;
  std::deque<double> priorities_;
};

}  // namespace drsrl
