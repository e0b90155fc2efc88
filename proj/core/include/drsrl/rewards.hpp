#pragma once

#include <cstddef>

#include "drsrl/world.hpp"

namespace drsrl {

enum class SafetyMode : unsigned char { Avoid, Brake };

struct RewardConfig {
  double C0 = 10.0;
  double d_safe = 10.0;
  double v_target = 14.0;
  double a_lat_max = 4.0;
  double a_lon_max = 4.0;
  double w_com = 0.25;
  double lambda_decay = 10.0;
  double delta0_deg = 10.0;
  double a0 = 4.0;
  double eps = 0.1;
  SafetyMode mode = SafetyMode::Avoid;

  /// Defaults with the mode matching the scenario (braking only for IJ).
  static RewardConfig for_scenario(ScenarioId id);
  void validate() const;
  bool operator==(const RewardConfig&) const = default;
};

struct RewardPair {
  double r_task = 0.0;
  double r_safe = 0.0;
};

// Component shapes.
double spacing_reward(double gap, double d_safe);
double speed_reward(double v, double v_target);
double comfort_reward(double a_lat, double a_lon, const RewardConfig& config);
double avoid_term(double distance, double v, double v_obstacle, double steer_deg, const RewardConfig& config);
double brake_term(double distance, double ttc, double accel, const RewardConfig& config);

/// Nearest participant ahead of the ego and inside its path, or the range
/// limit when there is none.
struct Obstacle {
  bool found = false;
  std::size_t index = 0;
  double gap = 0.0;        // bumper-to-edge longitudinal distance, m
  double speed_long = 0.0; // obstacle speed along the lane axis
  double ttc = 0.0;
};

/// Leading participant for the spacing term: vehicles or pedestrians that
/// occupy the ego's path ahead.
Obstacle leading_participant(const World& world, std::size_t ego);

/// Nearest conflicting obstacle for the safety term: the leading participant
/// or a pedestrian whose walking line will cross the ego's path ahead.
Obstacle conflicting_obstacle(const World& world, std::size_t ego);

/// Evaluated after the step that applied `ego`'s last control.
double task_reward(const World& world, std::size_t ego, bool collided, const RewardConfig& config);
double safety_mode_term(const World& world, std::size_t ego, const RewardConfig& config);
double safety_reward(const World& world, std::size_t ego, bool collided, const RewardConfig& config);
RewardPair compute_rewards(const World& world, std::size_t ego, bool collided, const RewardConfig& config);

}  // namespace drsrl
