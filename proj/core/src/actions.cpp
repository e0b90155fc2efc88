#include "drsrl/actions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "drsrl/risk.hpp"

namespace drsrl {

ActionTable::ActionTable(double a_max, double delta_max_deg) : a_max_(a_max), delta_max_(delta_max_deg) {
  for (double a : accel_levels()) entries_.push_back({a, 0.0});
  idle_ = kAccelLevels / 2;
  for (double d : steer_levels()) {
    if (d != 0.0) entries_.push_back({0.0, d});
  }
}

std::vector<double> ActionTable::accel_levels() const {
  std::vector<double> out(kAccelLevels);
  for (std::size_t i = 0; i < kAccelLevels; ++i) {
    const auto k = static_cast<double>(i) - static_cast<double>(kAccelLevels / 2);
    out[i] = a_max_ * k / static_cast<double>(kAccelLevels / 2);
  }
  return out;
}

std::vector<double> ActionTable::steer_levels() const {
  std::vector<double> out(kSteerLevels);
  for (std::size_t i = 0; i < kSteerLevels; ++i) {
    const auto k = static_cast<double>(i) - static_cast<double>(kSteerLevels / 2);
    out[i] = delta_max_ * k / static_cast<double>(kSteerLevels / 2);
  }
  return out;
}

double min_ttc_ahead(const World& world, std::size_t ego, double path_half_width) {
  const auto ps = world.participants();
  double best = kInfinity;
  for (std::size_t j = 0; j < ps.size(); ++j) {
    if (j == ego || !ps[j].state.is_vehicle()) continue;
    best = std::min(best, compute_ttc(ps[ego].state, ps[j].state, world.config(), path_half_width));
  }
  return best;
}

ActionMask mask_actions(const World& world, std::size_t ego, const ActionTable& table, const MaskConfig& config) {
  const auto& wc = world.config();
  const auto& p = world.participant(ego);
  const auto& s = p.state;
  const double dt = wc.dt;
  const double phi = heading_deviation(s.theta);
  const double ttc = min_ttc_ahead(world, ego, config.path_half_width);
  const bool cooling_down = world.time() - p.last_lane_change_t < config.lane_change_cooldown;
  // Tightest turning radius; the lateral room needed to straighten out from
  // heading phi is R (1 - cos phi).
  const double min_radius = wc.wheelbase / std::tan(wc.delta_max_deg * std::numbers::pi / 180.0);
  const double half_w = wc.vehicle_width / 2;

  ActionMask mask(table.size(), 1);
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (k == table.idle_index()) continue;
    const auto& e = table[k];
    bool ok = true;
    if (e.accel < 0.0 && s.v + e.accel * dt < -1e-9) ok = false;           // (b)
    if (e.accel > 0.0 && ttc < config.tau_accel) ok = false;                // (e)
    if (ok) {
      const ParticipantState next = step_vehicle(s, {e.accel, e.steer_deg}, dt, wc);
      const double phi_next = heading_deviation(next.theta);
      const bool turning_out = std::abs(phi_next) > std::abs(phi);
      if (e.steer_deg != 0.0) {
        if (std::abs(phi_next) > config.max_heading_dev) ok = false;           // (c)
        if (cooling_down && turning_out) ok = false;                           // (d)
        // (a): never turn further towards the edge from an edge lane.
        if (next.lane == 0 && phi_next < 0.0 && phi_next < phi) ok = false;
        if (next.lane == wc.lane_count - 1 && phi_next > 0.0 && phi_next > phi) ok = false;
      }
      // (a): whatever is not a correction must leave room to straighten out
      // before the edge. Steer-free actions hold the heading, so they count too.
      if (off_road(next, wc)) ok = false;
      if (phi_next != 0.0 && std::abs(phi_next) >= std::abs(phi)) {
        const double margin = phi_next < 0.0 ? next.y - half_w : wc.road_width() - half_w - next.y;
        const double needed = min_radius * (1.0 - std::cos(phi_next * std::numbers::pi / 180.0));
        if (margin < needed) ok = false;
      }
    }
    mask[k] = ok ? 1 : 0;
  }
  return mask;
}

}  // namespace drsrl
