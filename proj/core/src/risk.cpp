#include "drsrl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

void RiskConfig::validate() const {
  if (!(tau_v2v > 0.0) || !(tau_v2p > 0.0)) throw ConfigError("risk: TTC/PET thresholds must be positive");
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) throw ConfigError("risk: lambda weights must be >= 0");
  double beta_sum = 0.0;
  for (double b : beta) {
    if (b < 0.0) throw ConfigError("risk: event weights must be >= 0");
    beta_sum += b;
  }
  if (beta_sum > 1.0 + 1e-12) throw ConfigError("risk: event weights must sum to at most 1");
  if (!(w0 > 0.0 && w0 < 1.0)) throw ConfigError("risk: w0 must lie in (0, 1)");
  if (!(alpha0 > 0.5 && alpha0 < 1.0)) throw ConfigError("risk: alpha0 must lie in (0.5, 1)");
  if (!(eps_norm > 0.0 && eps_norm <= 1.0)) throw ConfigError("risk: eps_norm must lie in (0, 1]");
  if (!(event_radius >= 0.0)) throw ConfigError("risk: event_radius must be >= 0");
}

double compute_ttc(const ParticipantState& ego, const ParticipantState& other, const WorldConfig& world,
                   double path_half_width) {
  const double dx = other.x - ego.x;
  if (dx < 0.0 || std::abs(other.y - ego.y) >= path_half_width) return kInfinity;
  const double gap = dx - world.vehicle_length;
  if (gap <= 0.0) return 0.0;
  const double closing = ego.v * std::cos(ego.theta * kDegToRad) - other.v * std::cos(other.theta * kDegToRad);
  if (closing <= 0.0) return kInfinity;
  return gap / closing;
}

double compute_pet(const ParticipantState& vehicle, const ParticipantState& ped, const WorldConfig& world) {
  const double path_y = world.lane_center(vehicle.lane);
  const double dy = path_y - ped.y;
  const double band = world.vehicle_width / 2 + world.ped_radius;
  const double ped_vx = ped.v * std::cos(ped.theta * kDegToRad);
  const double ped_vy = ped.v * std::sin(ped.theta * kDegToRad);

  double ped_eta;
  if (std::abs(dy) <= band) {
    ped_eta = 0.0;
  } else if (ped_vy != 0.0 && (dy > 0.0) == (ped_vy > 0.0)) {
    ped_eta = std::abs(dy) / std::abs(ped_vy);
  } else {
    return kInfinity;
  }
  const double conflict_x = ped.x + ped_vx * ped_eta;

  const double front = vehicle.x + world.vehicle_length / 2;
  const double dist = conflict_x - front;
  double veh_eta;
  if (dist < -world.vehicle_length) {
    return kInfinity;
  } else if (dist <= 0.0) {
    veh_eta = 0.0;
  } else {
    const double vx = vehicle.v * std::cos(vehicle.theta * kDegToRad);
    if (vx <= 0.0) return kInfinity;
    veh_eta = dist / vx;
  }
  return std::abs(veh_eta - ped_eta);
}

double normalize_urgency(double value, double tau, double eps) {
  if (std::isnan(value)) return 1.0;
  if (value <= 0.0) return 1.0;
  if (std::isinf(value)) return eps;
  return std::max(eps, std::min(1.0, tau / value));
}

Urgency normalize_urgency(double ttc, double pet, const RiskConfig& config) {
  return {normalize_urgency(ttc, config.tau_v2v, config.eps_norm),
          normalize_urgency(pet, config.tau_v2p, config.eps_norm)};
}

double fuse_risk(double ttc_norm, double pet_norm, const std::array<bool, kEventKinds>& events,
                 const RiskConfig& config) {
  double event_term = 0.0;
  for (std::size_t k = 0; k < kEventKinds; ++k) {
    if (events[k]) event_term += config.beta[k];
  }
  const double raw = config.lambda1 * ttc_norm + config.lambda2 * pet_norm + config.lambda3 * event_term;
  return std::clamp(raw, config.w0, 1.0);
}

std::vector<RiskReport> assess_risk(const World& world, const RiskConfig& config) {
  const auto ps = world.participants();
  const auto& wc = world.config();
  std::vector<RiskReport> reports(world.av_count());
  for (std::size_t i = 0; i < world.av_count(); ++i) {
    const auto& ego = ps[i].state;
    RiskReport& r = reports[i];
    for (std::size_t j = 0; j < ps.size(); ++j) {
      if (j == i) continue;
      const auto& other = ps[j].state;
      if (other.is_vehicle()) {
        r.min_ttc = std::min(r.min_ttc, compute_ttc(ego, other, wc, config.path_half_width));
      } else {
        r.min_pet = std::min(r.min_pet, compute_pet(ego, other, wc));
      }
    }
    for (const auto& e : world.events()) {
      const auto& src = ps[e.source].state;
      if (std::hypot(src.x - ego.x, src.y - ego.y) <= config.event_radius) {
        r.event_flags[static_cast<std::size_t>(e.tag)] = true;
      }
    }
    const auto u = normalize_urgency(r.min_ttc, r.min_pet, config);
    r.ttc_norm = u.ttc_norm;
    r.pet_norm = u.pet_norm;
    r.risk = fuse_risk(r.ttc_norm, r.pet_norm, r.event_flags, config);
    const bool any_event = std::any_of(r.event_flags.begin(), r.event_flags.end(), [](bool b) { return b; });
    r.in_dcz = r.min_ttc <= config.tau_v2v || r.min_pet <= config.tau_v2p || any_event;
  }
  return reports;
}

std::vector<bool> in_dcz(const World& world, const RiskConfig& config) {
  const auto reports = assess_risk(world, config);
  std::vector<bool> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back(r.in_dcz);
  return out;
}

double scene_risk(const World& world, std::span<const RiskReport> reports, const RiskConfig& config) {
  double out = config.w0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!world.participant(i).exited) out = std::max(out, reports[i].risk);
  }
  return out;
}

double safety_weight(double risk, const RiskConfig& config) {
  return risk >= config.tau_risk ? config.alpha0 : 1.0 - config.alpha0;
}

}  // namespace drsrl
