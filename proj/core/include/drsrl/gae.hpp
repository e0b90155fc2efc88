#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace drsrl {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

/// Generalized advantage estimation over one trajectory. `dones[t]` marks a
/// terminal transition (no bootstrapping past it); `bootstrap` is V(s_n) for
/// the state after the last step when that step is not terminal.
GaeResult gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
              double bootstrap, double gamma, double lambda);

}  // namespace drsrl
