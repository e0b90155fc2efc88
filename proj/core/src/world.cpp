#include "drsrl/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool finite(const ParticipantState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.theta) && std::isfinite(s.v);
}

struct Rect {
  double cx, cy, half_len, half_wid, cos_t, sin_t;
};

Rect footprint(const ParticipantState& s, const WorldConfig& config) {
  const double th = s.theta * kDegToRad;
  return {s.x, s.y, config.vehicle_length / 2, config.vehicle_width / 2, std::cos(th), std::sin(th)};
}

// Projected half-extent of a rectangle on a unit axis.
double project_radius(const Rect& r, double ax, double ay) {
  return r.half_len * std::abs(r.cos_t * ax + r.sin_t * ay) +
         r.half_wid * std::abs(-r.sin_t * ax + r.cos_t * ay);
}

bool rects_overlap(const Rect& a, const Rect& b) {
  const double dx = b.cx - a.cx;
  const double dy = b.cy - a.cy;
  const std::array<std::array<double, 2>, 4> axes{{{a.cos_t, a.sin_t},
                                                   {-a.sin_t, a.cos_t},
                                                   {b.cos_t, b.sin_t},
                                                   {-b.sin_t, b.cos_t}}};
  for (const auto& ax : axes) {
    const double dist = std::abs(dx * ax[0] + dy * ax[1]);
    if (dist >= project_radius(a, ax[0], ax[1]) + project_radius(b, ax[0], ax[1])) return false;
  }
  return true;
}

bool rect_disc_overlap(const Rect& r, double px, double py, double radius) {
  const double dx = px - r.cx;
  const double dy = py - r.cy;
  const double local_x = dx * r.cos_t + dy * r.sin_t;
  const double local_y = -dx * r.sin_t + dy * r.cos_t;
  const double qx = std::clamp(local_x, -r.half_len, r.half_len);
  const double qy = std::clamp(local_y, -r.half_wid, r.half_wid);
  const double ex = local_x - qx;
  const double ey = local_y - qy;
  return ex * ex + ey * ey < radius * radius;
}

}  // namespace

std::string_view to_string(ParticipantKind kind) {
  switch (kind) {
    case ParticipantKind::AV: return "AV";
    case ParticipantKind::BV: return "BV";
    case ParticipantKind::Ped: return "Ped";
  }
  return "?";
}

std::string_view to_string(EventTag tag) {
  switch (tag) {
    case EventTag::LeadBrake: return "lead_brake";
    case EventTag::PedCross: return "ped_cross";
    case EventTag::CutIn: return "cut_in";
  }
  return "?";
}

std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::LVEB: return "LVEB";
    case ScenarioId::OPI: return "OPI";
    case ScenarioId::RPC: return "RPC";
    case ScenarioId::IJ: return "IJ";
  }
  return "?";
}

ScenarioId scenario_from_string(std::string_view name) {
  if (name == "LVEB") return ScenarioId::LVEB;
  if (name == "OPI") return ScenarioId::OPI;
  if (name == "RPC") return ScenarioId::RPC;
  if (name == "IJ") return ScenarioId::IJ;
  throw ConfigError("unknown scenario '" + std::string(name) + "' (expected LVEB, OPI, RPC or IJ)");
}

std::string_view to_string(EpisodeStatus::Outcome outcome) {
  switch (outcome) {
    case EpisodeStatus::Outcome::Running: return "running";
    case EpisodeStatus::Outcome::Collision: return "collision";
    case EpisodeStatus::Outcome::Success: return "success";
    case EpisodeStatus::Outcome::Timeout: return "timeout";
  }
  return "?";
}

std::array<double, 3> ParticipantState::lane_one_hot() const {
  std::array<double, 3> out{};
  out.at(static_cast<std::size_t>(lane)) = 1.0;
  return out;
}

std::array<double, 3> ParticipantState::kind_one_hot() const {
  std::array<double, 3> out{};
  out[static_cast<std::size_t>(kind)] = 1.0;
  return out;
}

std::array<double, kVehicleFeatureDim> VehicleObservation::flatten() const {
  std::array<double, kVehicleFeatureDim> out{};
  out[0] = base.x;
  out[1] = base.y;
  out[2] = base.theta;
  out[3] = base.v;
  const auto lane = base.lane_one_hot();
  const auto kind = base.kind_one_hot();
  std::copy(lane.begin(), lane.end(), out.begin() + 4);
  std::copy(kind.begin(), kind.end(), out.begin() + 7);
  for (std::size_t j = 0; j < kNeighborSlots; ++j) {
    out[10 + 2 * j] = p[j].dd;
    out[11 + 2 * j] = p[j].dv;
  }
  return out;
}

std::array<double, kPedFeatureDim> pedestrian_features(const ParticipantState& ped) {
  std::array<double, kPedFeatureDim> out{};
  out[0] = ped.x;
  out[1] = ped.y;
  out[2] = ped.theta;
  out[3] = ped.v;
  const auto lane = ped.lane_one_hot();
  const auto kind = ped.kind_one_hot();
  std::copy(lane.begin(), lane.end(), out.begin() + 4);
  std::copy(kind.begin(), kind.end(), out.begin() + 7);
  return out;
}

int lane_from_y(double y, const WorldConfig& config) {
  const int lane = static_cast<int>(std::floor(y / config.lane_width));
  return std::clamp(lane, 0, config.lane_count - 1);
}

double wrap_degrees(double theta) {
  double w = std::fmod(theta, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w = 0.0;
  return w;
}

double heading_deviation(double theta) {
  const double w = wrap_degrees(theta);
  return w > 180.0 ? w - 360.0 : w;
}

double lateral_acceleration(double v, double steer_deg, const WorldConfig& config) {
  return v * v * std::tan(steer_deg * kDegToRad) / config.wheelbase;
}

ParticipantState step_vehicle(const ParticipantState& state, ControlInput control, double dt,
                              const WorldConfig& config) {
  if (!finite(state) || !std::isfinite(control.accel) || !std::isfinite(control.steer_deg) ||
      !std::isfinite(dt)) {
    throw InvalidStateError("step_vehicle: non-finite state or control");
  }
  constexpr double kSlack = 1e-9;
  if (std::abs(control.accel) > config.a_max + kSlack ||
      std::abs(control.steer_deg) > config.delta_max_deg + kSlack) {
    throw InvalidStateError("step_vehicle: control outside actuator limits");
  }
  const double th = state.theta * kDegToRad;
  ParticipantState next = state;
  next.x = state.x + state.v * std::cos(th) * dt;
  next.y = state.y + state.v * std::sin(th) * dt;
  const double yaw_rate = state.v / config.wheelbase * std::tan(control.steer_deg * kDegToRad);
  next.theta = wrap_degrees(state.theta + yaw_rate * dt / kDegToRad);
  next.v = std::clamp(state.v + control.accel * dt, 0.0, config.v_max);
  next.lane = lane_from_y(next.y, config);
  return next;
}

RelativeMotionFeatures relative_motion_features(const ParticipantState& ego,
                                                std::span<const ParticipantState> others,
                                                double perception_range) {
  RelativeMotionFeatures out;
  out.fill(RelativeMotion{perception_range, 0.0});
  std::array<bool, kNeighborSlots> taken{};
  for (const auto& other : others) {
    if (!other.is_vehicle()) continue;
    const double dx = other.x - ego.x;
    const double dy = other.y - ego.y;
    if (std::hypot(dx, dy) > perception_range) continue;
    const int dl = other.lane - ego.lane;
    const bool ahead = dx >= 0.0;
    Sector sector;
    if (dl == 0) {
      sector = ahead ? Sector::Front : Sector::Rear;
    } else if (dl == 1) {
      sector = ahead ? Sector::LeftFront : Sector::LeftRear;
    } else if (dl == -1) {
      sector = ahead ? Sector::RightFront : Sector::RightRear;
    } else {
      continue;
    }
    const auto slot = static_cast<std::size_t>(sector);
    const double dist = std::abs(dx);
    // Strict comparison keeps the lower index on ties.
    if (!taken[slot] || dist < out[slot].dd) {
      out[slot] = RelativeMotion{dist, ego.v - other.v};
      taken[slot] = true;
    }
  }
  return out;
}

VehicleObservation observe_vehicle(std::span<const ParticipantState> all, std::size_t ego,
                                   double perception_range) {
  std::vector<ParticipantState> others;
  others.reserve(all.size());
  for (std::size_t j = 0; j < all.size(); ++j) {
    if (j != ego) others.push_back(all[j]);
  }
  return VehicleObservation{all[ego], relative_motion_features(all[ego], others, perception_range)};
}

RoadGraph build_topology(std::span<const ParticipantState> participants, double comm_range,
                         double perception_range) {
  const std::size_t n = participants.size();
  if (n == 0) throw DimensionError("build_topology: need at least one participant");
  RoadGraph g;
  g.nodes.resize(n);
  g.adjacency.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (participants[i].is_vehicle()) {
      g.nodes[i] = observe_vehicle(participants, i, perception_range).flatten();
    } else {
      const auto ped = pedestrian_features(participants[i]);
      g.nodes[i].fill(0.0);
      std::copy(ped.begin(), ped.end(), g.nodes[i].begin());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.adjacency[i * n + i] = 1;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::hypot(participants[i].x - participants[j].x,
                                  participants[i].y - participants[j].y);
      const std::uint8_t e = d <= comm_range ? 1 : 0;
      g.adjacency[i * n + j] = e;
      g.adjacency[j * n + i] = e;
    }
  }
  return g;
}

std::vector<double> fuse_observations(const World& world) {
  const auto states = world.states();
  if (states.empty()) throw DimensionError("fuse_observations: world has no participants");
  std::vector<double> out;
  out.reserve(states.size() * kVehicleFeatureDim);
  const double range = world.config().perception_range;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].is_vehicle()) {
      const auto f = observe_vehicle(states, i, range).flatten();
      out.insert(out.end(), f.begin(), f.end());
    } else {
      const auto f = pedestrian_features(states[i]);
      out.insert(out.end(), f.begin(), f.end());
    }
  }
  return out;
}

bool footprints_overlap(const ParticipantState& a, const ParticipantState& b,
                        const WorldConfig& config) {
  if (a.is_vehicle() && b.is_vehicle()) {
    return rects_overlap(footprint(a, config), footprint(b, config));
  }
  if (a.is_vehicle()) return rect_disc_overlap(footprint(a, config), b.x, b.y, config.ped_radius);
  if (b.is_vehicle()) return rect_disc_overlap(footprint(b, config), a.x, a.y, config.ped_radius);
  const double r = 2 * config.ped_radius;
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy < r * r;
}

bool off_road(const ParticipantState& s, const WorldConfig& config) {
  return s.y < 0.0 || s.y > config.road_width();
}

bool EpisodeStatus::av_collision(std::span<const Participant> participants) const {
  if (outcome != Outcome::Collision || !collided_pair) return false;
  return participants[collided_pair->first].state.kind == ParticipantKind::AV ||
         participants[collided_pair->second].state.kind == ParticipantKind::AV;
}

EpisodeStatus check_termination(const World& world, int horizon) {
  EpisodeStatus status;
  const auto ps = world.participants();
  const auto& config = world.config();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].exited) continue;  // an AV past the exit line has left the scene
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      if (ps[j].exited) continue;
      // Pedestrian groups walk in formation; only vehicle contacts count.
      if (!ps[i].state.is_vehicle() && !ps[j].state.is_vehicle()) continue;
      if (footprints_overlap(ps[i].state, ps[j].state, config)) {
        status.outcome = EpisodeStatus::Outcome::Collision;
        status.collided_pair = std::pair{i, j};
        return status;
      }
    }
  }
  for (std::size_t i = 0; i < world.av_count(); ++i) {
    if (!ps[i].exited && off_road(ps[i].state, config)) {
      status.outcome = EpisodeStatus::Outcome::Collision;
      status.collided_pair = std::pair{i, i};
      status.road_departure = true;
      return status;
    }
  }
  bool all_exited = world.av_count() > 0;
  for (std::size_t i = 0; i < world.av_count(); ++i) all_exited = all_exited && ps[i].exited;
  if (all_exited) {
    status.outcome = EpisodeStatus::Outcome::Success;
  } else if (world.step_count() >= horizon) {
    status.outcome = EpisodeStatus::Outcome::Timeout;
  }
  return status;
}

World::World(WorldConfig config, ScenarioId scenario, std::vector<Participant> participants,
             double exit_x, int horizon)
    : config_(config),
      scenario_(scenario),
      participants_(std::move(participants)),
      exit_x_(exit_x),
      horizon_(horizon) {
  if (horizon_ <= 0) throw ConfigError("world horizon must be positive");
  if (!(config_.dt > 0.0)) throw ConfigError("world dt must be positive");
  int last_kind = 0;
  for (auto& p : participants_) {
    if (!finite(p.state)) throw InvalidStateError("world: non-finite initial participant state");
    const int k = static_cast<int>(p.state.kind);
    if (k < last_kind) throw ConfigError("world: participants must be ordered AVs, BVs, Peds");
    last_kind = k;
    if (p.state.kind == ParticipantKind::AV) ++n_avs_;
    p.state.theta = wrap_degrees(p.state.theta);
    p.state.lane = lane_from_y(p.state.y, config_);
  }
}

std::vector<ParticipantState> World::states() const {
  std::vector<ParticipantState> out;
  out.reserve(participants_.size());
  for (const auto& p : participants_) out.push_back(p.state);
  return out;
}

std::size_t World::vehicle_count() const {
  return static_cast<std::size_t>(std::count_if(participants_.begin(), participants_.end(),
                                                [](const Participant& p) { return p.state.is_vehicle(); }));
}

std::size_t World::ped_count() const { return participants_.size() - vehicle_count(); }

bool World::event_active(EventTag tag) const {
  return std::any_of(events_.begin(), events_.end(), [tag](const ActiveEvent& e) { return e.tag == tag; });
}

void World::set_state(std::size_t i, const ParticipantState& s) {
  auto& p = participants_.at(i);
  p.state = s;
  p.state.theta = wrap_degrees(s.theta);
  p.state.lane = lane_from_y(s.y, config_);
}

std::vector<EventTag> World::trigger_events() {
  std::vector<EventTag> fired;
  for (std::size_t i = n_avs_; i < participants_.size(); ++i) {
    auto& p = participants_[i];
    auto& sc = p.script;
    if (sc.fired || sc.trigger == Script::Trigger::None) continue;
    bool fire = false;
    if (sc.trigger == Script::Trigger::Time) {
      fire = t_ + 1e-9 >= sc.trigger_value;
    } else {
      for (std::size_t a = 0; a < n_avs_; ++a) {
        const auto& av = participants_[a];
        if (av.exited) continue;
        const double gap = p.state.x - av.state.x;
        if (gap >= 0.0 && gap <= sc.trigger_value) {
          fire = true;
          break;
        }
      }
    }
    if (!fire) continue;
    sc.fired = true;
    sc.fired_at = t_;
    sc.mode = sc.on_trigger;
    if (sc.mode == Script::Mode::CutIn) sc.ramp_from_y = p.state.y;
    if (sc.mode == Script::Mode::Walk) {
      p.state.theta = 90.0;
      p.state.v = sc.walk_speed;
    }
    if (sc.tag) {
      events_.push_back({*sc.tag, i});
      fired.push_back(*sc.tag);
    }
  }
  return fired;
}

void World::advance_script(Participant& p) {
  auto& s = p.state;
  auto& sc = p.script;
  const double dt = config_.dt;
  const double th = s.theta * kDegToRad;
  p.last_control = {};
  p.last_lat_accel = 0.0;
  switch (sc.mode) {
    case Script::Mode::Cruise:
    case Script::Mode::Walk:
      s.x += s.v * std::cos(th) * dt;
      s.y += s.v * std::sin(th) * dt;
      if (sc.mode == Script::Mode::Walk && s.y >= sc.walk_until_y) {
        sc.mode = Script::Mode::Done;
        s.v = 0.0;
      }
      break;
    case Script::Mode::Brake: {
      s.x += s.v * std::cos(th) * dt;
      s.y += s.v * std::sin(th) * dt;
      if (s.v > 0.0) p.last_control.accel = -sc.brake_decel;
      s.v = std::max(0.0, s.v - sc.brake_decel * dt);
      break;
    }
    case Script::Mode::CutIn: {
      const double x0 = s.x;
      const double y0 = s.y;
      const double v0 = s.v;
      s.x += v0 * dt;
      const double u = std::clamp((t_ + dt - sc.fired_at) / sc.ramp_duration, 0.0, 1.0);
      s.y = sc.ramp_from_y + (sc.ramp_to_y - sc.ramp_from_y) * (1.0 - std::cos(std::numbers::pi * u)) / 2.0;
      s.v = std::min(sc.cut_in_speed, v0 + sc.cut_in_accel * dt);
      p.last_control.accel = (s.v - v0) / dt;
      const double dx = s.x - x0;
      const double dy = s.y - y0;
      s.theta = (dx == 0.0 && dy == 0.0) ? s.theta : wrap_degrees(std::atan2(dy, dx) / kDegToRad);
      if (u >= 1.0) {
        sc.mode = Script::Mode::Cruise;
        s.theta = 0.0;
      }
      break;
    }
    case Script::Mode::Parked:
    case Script::Mode::Standing:
    case Script::Mode::Done:
      break;
  }
  s.lane = lane_from_y(s.y, config_);
}

void World::refresh_events() {
  std::erase_if(events_, [this](const ActiveEvent& e) {
    const auto mode = participants_[e.source].script.mode;
    return mode == Script::Mode::Done || mode == Script::Mode::Cruise;
  });
}

void World::step(std::span<const ControlInput> av_controls) {
  if (av_controls.size() != n_avs_) {
    throw DimensionError("World::step: expected " + std::to_string(n_avs_) + " AV controls, got " +
                         std::to_string(av_controls.size()));
  }
  trigger_events();
  for (std::size_t i = 0; i < n_avs_; ++i) {
    auto& p = participants_[i];
    const ControlInput control = p.exited ? ControlInput{} : av_controls[i];
    const int old_lane = p.state.lane;
    p.last_lat_accel = lateral_acceleration(p.state.v, control.steer_deg, config_);
    p.state = step_vehicle(p.state, control, config_.dt, config_);
    p.last_control = control;
    if (p.state.lane != old_lane) p.last_lane_change_t = t_ + config_.dt;
    if (p.state.x >= exit_x_) p.exited = true;
  }
  for (std::size_t i = n_avs_; i < participants_.size(); ++i) advance_script(participants_[i]);
  ++steps_;
  t_ = steps_ * config_.dt;
  refresh_events();
}

}  // namespace drsrl
