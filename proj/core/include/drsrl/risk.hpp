#pragma once

#include <array>
#include <limits>
#include <vector>

#include "drsrl/world.hpp"

namespace drsrl {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thresholds and fusion weights of the conflict-zone risk model.
struct RiskConfig {
  double tau_v2v = 3.0;  // TTC threshold, s
  double tau_v2p = 2.0;  // PET threshold, s
  double lambda1 = 0.4;
  double lambda2 = 0.3;
  double lambda3 = 0.3;
  std::array<double, kEventKinds> beta{0.4, 0.35, 0.25};  // lead-brake, ped-cross, cut-in
  double w0 = 0.05;
  double tau_risk = 0.4;
  double alpha0 = 0.8;
  double eps_norm = 0.01;
  double event_radius = 50.0;  // an event counts for an AV within this distance of its source
  double path_half_width = 2.3;  // lateral offset under which a vehicle is in the ego's path

  void validate() const;
  bool operator==(const RiskConfig&) const = default;
};

struct RiskReport {
  double min_ttc = kInfinity;
  double min_pet = kInfinity;
  double ttc_norm = 0.0;
  double pet_norm = 0.0;
  std::array<bool, kEventKinds> event_flags{};
  double risk = 0.0;
  bool in_dcz = false;
};

/// Bumper-to-bumper gap over closing speed along the lane axis. Only
/// vehicles ahead of the ego and laterally inside its path count.
double compute_ttc(const ParticipantState& ego, const ParticipantState& other, const WorldConfig& world,
                   double path_half_width = 2.3);

/// Time separation between the vehicle and the pedestrian reaching the point
/// where the pedestrian's walking line crosses the vehicle's lane centerline.
double compute_pet(const ParticipantState& vehicle, const ParticipantState& ped, const WorldConfig& world);

/// Threshold-relative reciprocal min(1, tau/x), floored at eps.
double normalize_urgency(double value, double tau, double eps);

struct Urgency {
  double ttc_norm;
  double pet_norm;
};
Urgency normalize_urgency(double ttc, double pet, const RiskConfig& config);

/// Weighted fusion of the urgency terms and event indicators, clamped to [w0, 1].
double fuse_risk(double ttc_norm, double pet_norm, const std::array<bool, kEventKinds>& events,
                 const RiskConfig& config);

/// One report per AV, in AV order.
std::vector<RiskReport> assess_risk(const World& world, const RiskConfig& config);

/// Per-AV conflict-zone membership.
std::vector<bool> in_dcz(const World& world, const RiskConfig& config);

/// Maximum risk over AVs that have not yet exited; w0 when none remain.
double scene_risk(const World& world, std::span<const RiskReport> reports, const RiskConfig& config);

/// Piecewise safety weighting: alpha0 at or above tau_risk, 1 - alpha0 below.
double safety_weight(double risk, const RiskConfig& config);

}  // namespace drsrl
