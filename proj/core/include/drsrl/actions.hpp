#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "drsrl/world.hpp"

namespace drsrl {

inline constexpr std::size_t kAccelLevels = 11;
inline constexpr std::size_t kSteerLevels = 13;
inline constexpr std::size_t kActionCount = kAccelLevels + kSteerLevels - 1;

struct ActionEntry {
  double accel = 0.0;
  double steer_deg = 0.0;

  bool operator==(const ActionEntry&) const = default;
};

/// Coupled discrete action space: steering is only commanded at zero
/// acceleration. Rows 0..10 sweep acceleration with straight wheels, rows
/// 11..22 the twelve nonzero steering levels at zero acceleration.
class ActionTable {
 public:
  explicit ActionTable(double a_max = 4.0, double delta_max_deg = 30.0);

  std::size_t size() const { return entries_.size(); }
  const ActionEntry& operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<ActionEntry>& entries() const { return entries_; }
  /// Index of the (a = 0, delta = 0) action.
  std::size_t idle_index() const { return idle_; }
  ControlInput control(std::size_t i) const { return {entries_.at(i).accel, entries_.at(i).steer_deg}; }

  std::vector<double> accel_levels() const;
  std::vector<double> steer_levels() const;
  static constexpr std::size_t uncoupled_size() { return kAccelLevels * kSteerLevels; }

  bool operator==(const ActionTable&) const = default;

 private:
  double a_max_;
  double delta_max_;
  std::vector<ActionEntry> entries_;
  std::size_t idle_ = 0;
};

/// Feasibility mask, one byte per action (1 = allowed).
using ActionMask = std::vector<std::uint8_t>;

struct MaskConfig {
  double tau_accel = 2.0;          // TTC below which acceleration is blocked, s
  double max_heading_dev = 60.0;   // U-turn limit relative to the lane direction, deg
  double lane_change_cooldown = 2.0;  // s
  double path_half_width = 2.3;

  bool operator==(const MaskConfig&) const = default;
};

/// Applies the exploration constraints for AV `ego`:
///  (a) no steering that heads off the road, (b) no reversing,
///  (c) no heading beyond max_heading_dev, (d) no new lateral manoeuvre
///  during the lane-change cooldown, (e) no acceleration when TTC is short.
/// The idle action is always allowed.
ActionMask mask_actions(const World& world, std::size_t ego, const ActionTable& table, const MaskConfig& config);

/// Smallest TTC from the ego to any vehicle ahead in its path.
double min_ttc_ahead(const World& world, std::size_t ego, double path_half_width);

}  // namespace drsrl
