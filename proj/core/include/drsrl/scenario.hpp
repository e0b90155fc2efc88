#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "drsrl/world.hpp"

namespace drsrl {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

/// Everything needed to build one randomized episode. Missing randomization
/// keys fall back to the scenario's defaults; unknown keys are rejected.
struct ScenarioSpec {
  ScenarioId id = ScenarioId::LVEB;
  int n_avs = 2;
  int n_bvs = 2;
  int n_peds = 0;
  std::map<std::string, Range> randomization;
  std::uint64_t seed = 0;
  int horizon = 200;

  static ScenarioSpec defaults(ScenarioId id);
  static const std::map<std::string, Range>& default_ranges(ScenarioId id);

  Range range(const std::string& key) const;
  void validate() const;

  bool operator==(const ScenarioSpec&) const = default;
};

/// Builds the initial world for `spec`. Identical specs give bit-identical
/// worlds.
World instantiate_scenario(const ScenarioSpec& spec, const WorldConfig& config = {});

}  // namespace drsrl
