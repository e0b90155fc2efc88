#include "drsrl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "drsrl/errors.hpp"
#include "drsrl/risk.hpp"

namespace drsrl {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kVehiclePathHalfWidth = 2.3;
constexpr double kPedPathMargin = 0.5;

double longitudinal_speed(const ParticipantState& s) { return s.v * std::cos(s.theta * kDegToRad); }

double ttc_to(const ParticipantState& ego, double gap, double obstacle_speed) {
  if (gap <= 0.0) return 0.0;
  const double closing = longitudinal_speed(ego) - obstacle_speed;
  return closing > 0.0 ? gap / closing : kInfinity;
}
}  // namespace

RewardConfig RewardConfig::for_scenario(ScenarioId id) {
  RewardConfig c;
  c.mode = id == ScenarioId::IJ ? SafetyMode::Brake : SafetyMode::Avoid;
  return c;
}

void RewardConfig::validate() const {
  if (!(C0 > 0.0)) throw ConfigError("reward: C0 must be positive");
  if (!(lambda_decay > 0.0)) throw ConfigError("reward: lambda_decay must be positive");
  if (!(eps > 0.0)) throw ConfigError("reward: eps must be positive");
  if (!(d_safe > 0.0) || !(v_target > 0.0)) throw ConfigError("reward: d_safe and v_target must be positive");
  if (!(a_lat_max > 0.0) || !(a_lon_max > 0.0)) throw ConfigError("reward: comfort caps must be positive");
  if (!(delta0_deg > 0.0) || !(a0 > 0.0)) throw ConfigError("reward: delta0 and a0 must be positive");
}

double spacing_reward(double gap, double d_safe) { return -std::max(0.0, 1.0 - gap / d_safe); }

double speed_reward(double v, double v_target) {
  return std::clamp(1.0 - std::abs(v - v_target) / v_target, -1.0, 1.0);
}

double comfort_reward(double a_lat, double a_lon, const RewardConfig& config) {
  return -(std::abs(a_lat) / config.a_lat_max + std::abs(a_lon) / config.a_lon_max) * config.w_com;
}

double avoid_term(double distance, double v, double v_obstacle, double steer_deg, const RewardConfig& config) {
  return std::exp(-distance / config.lambda_decay) * (v - v_obstacle) *
         std::min(std::abs(steer_deg) / config.delta0_deg, 1.0);
}

double brake_term(double distance, double ttc, double accel, const RewardConfig& config) {
  if (std::isinf(ttc)) return 0.0;
  const double decel = std::max(0.0, -accel);
  return std::exp(-distance / config.lambda_decay) / (ttc + config.eps) * std::min(decel / config.a0, 1.0);
}

Obstacle leading_participant(const World& world, std::size_t ego) {
  const auto ps = world.participants();
  const auto& wc = world.config();
  const auto& e = ps[ego].state;
  const double front = e.x + wc.vehicle_length / 2;
  Obstacle best;
  best.gap = wc.perception_range;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    if (j == ego) continue;
    const auto& o = ps[j].state;
    const double dy = std::abs(o.y - e.y);
    const double extent = o.is_vehicle() ? wc.vehicle_length / 2 : wc.ped_radius;
    const double half_width = o.is_vehicle() ? kVehiclePathHalfWidth
                                             : wc.vehicle_width / 2 + wc.ped_radius + kPedPathMargin;
    if (dy >= half_width || o.x < e.x) continue;
    const double gap = std::max(0.0, o.x - extent - front);
    if (gap > wc.perception_range) continue;
    if (!best.found || gap < best.gap) {
      best.found = true;
      best.index = j;
      best.gap = gap;
      best.speed_long = longitudinal_speed(o);
    }
  }
  best.ttc = best.found ? ttc_to(e, best.gap, best.speed_long) : kInfinity;
  return best;
}

Obstacle conflicting_obstacle(const World& world, std::size_t ego) {
  Obstacle best = leading_participant(world, ego);
  const auto ps = world.participants();
  const auto& wc = world.config();
  const auto& e = ps[ego].state;
  const double front = e.x + wc.vehicle_length / 2;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const auto& o = ps[j].state;
    if (o.is_vehicle() || o.x < e.x) continue;
    if (std::isinf(compute_pet(e, o, wc))) continue;
    const double gap = std::max(0.0, o.x - wc.ped_radius - front);
    if (gap > wc.perception_range) continue;
    if (!best.found || gap < best.gap) {
      best.found = true;
      best.index = j;
      best.gap = gap;
      best.speed_long = longitudinal_speed(o);
      best.ttc = ttc_to(e, gap, best.speed_long);
    }
  }
  return best;
}

double task_reward(const World& world, std::size_t ego, bool collided, const RewardConfig& config) {
  const auto& p = world.participant(ego);
  const Obstacle lead = leading_participant(world, ego);
  const double r_col = collided ? -config.C0 : 0.0;
  const double r_dis = spacing_reward(lead.gap, config.d_safe);
  const double r_vel = speed_reward(p.state.v, config.v_target);
  const double r_com = comfort_reward(p.last_lat_accel, p.last_control.accel, config);
  return r_col + r_dis + r_vel + r_com;
}

double safety_mode_term(const World& world, std::size_t ego, const RewardConfig& config) {
  const auto& p = world.participant(ego);
  const Obstacle obs = conflicting_obstacle(world, ego);
  const double d = obs.found ? obs.gap : world.config().perception_range;
  if (config.mode == SafetyMode::Avoid) {
    const double v_f = obs.found ? obs.speed_long : 0.0;
    return avoid_term(d, p.state.v, v_f, p.last_control.steer_deg, config);
  }
  return brake_term(d, obs.found ? obs.ttc : kInfinity, p.last_control.accel, config);
}

double safety_reward(const World& world, std::size_t ego, bool collided, const RewardConfig& config) {
  return task_reward(world, ego, collided, config) + safety_mode_term(world, ego, config);
}

RewardPair compute_rewards(const World& world, std::size_t ego, bool collided, const RewardConfig& config) {
  const double task = task_reward(world, ego, collided, config);
  return {task, task + safety_mode_term(world, ego, config)};
}

}  // namespace drsrl
