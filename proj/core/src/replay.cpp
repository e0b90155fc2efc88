#include "drsrl/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drsrl/errors.hpp"

namespace drsrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, double kappa, double is_exponent)
    : capacity_(capacity), kappa_(kappa), is_exponent_(is_exponent) {
  if (capacity_ == 0) throw ConfigError("replay buffer capacity must be positive");
  if (kappa_ < 0.0 || is_exponent_ < 0.0) throw ConfigError("replay exponents must be nonnegative");
}

void ReplayBuffer::push(Transition t, double priority) {
  if (!(priority >= 0.0) || !std::isfinite(priority)) throw InvalidStateError("replay priority must be finite and >= 0");
  if (items_.size() == capacity_) {
    items_.pop_front();
    priorities_.pop_front();
  }
  items_.push_back(std::move(t));
  priorities_.push_back(priority);
}

void ReplayBuffer::clear() {
  items_.clear();
  priorities_.clear();
}

void ReplayBuffer::evict_oldest(std::size_t n) {
  n = std::min(n, items_.size());
  items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(n));
  priorities_.erase(priorities_.begin(), priorities_.begin() + static_cast<std::ptrdiff_t>(n));
}

void ReplayBuffer::update_priority(std::size_t i, double risk) {
  if (i >= items_.size()) {
    throw std::out_of_range("replay index " + std::to_string(i) + " out of range (size " +
                            std::to_string(items_.size()) + ")");
  }
  if (!(risk >= 0.0) || !std::isfinite(risk)) throw InvalidStateError("replay priority must be finite and >= 0");
  priorities_[i] = risk;
  items_[i].risk = risk;
}

std::vector<double> ReplayBuffer::scaled() const {
  std::vector<double> s(priorities_.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::pow(priorities_[i], kappa_);
  return s;
}

std::vector<double> ReplayBuffer::probabilities() const {
  auto p = scaled();
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) throw NumericalError("replay priorities sum to zero");
  for (double& v : p) v /= total;
  return p;
}

ReplayBuffer::Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (items_.empty()) throw InvalidStateError("cannot sample from an empty replay buffer");
  const auto probs = probabilities();
  std::vector<double> cum(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cum[i] = acc;
  }
  Batch b;
  b.indices.reserve(batch_size);
  b.weights.reserve(batch_size);
  const auto n = static_cast<double>(probs.size());
  double max_w = 0.0;
  for (std::size_t k = 0; k < batch_size; ++k) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t idx = it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
    while (probs[idx] == 0.0 && idx > 0) --idx;  // never land on a zero-probability slot
    const double w = std::pow(n * probs[idx], -is_exponent_);
    b.indices.push_back(idx);
    b.weights.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (double& w : b.weights) w /= max_w;
  return b;
}

}  // namespace drsrl
