#include "drsrl/gae.hpp"

#include "drsrl/errors.hpp"

namespace drsrl {

GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
              double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw DimensionError("gae: rewards, values and dones differ in length");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double next_value = t + 1 < n ? values[t + 1] : bootstrap;
    const double delta = rewards[t] + gamma * live * next_value - values[t];
    running = delta + gamma * lambda * live * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

}  // namespace drsrl
