#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace drsrl {

inline constexpr std::size_t kVehicleFeatureDim = 22;
inline constexpr std::size_t kPedFeatureDim = 10;
inline constexpr std::size_t kNeighborSlots = 6;

/// Road geometry, vehicle model constants and sensing ranges.
///
/// The road runs east along +x. Lanes are numbered from the right edge
/// (y = 0) upwards, so lane 0 is the rightmost lane and the left edge sits
/// at y = lane_count * lane_width.
struct WorldConfig {
  double dt = 0.1;
  double lane_width = 3.5;
  int lane_count = 3;
  double vehicle_length = 4.8;
  double vehicle_width = 1.8;
  double wheelbase = 2.7;
  double ped_radius = 0.3;
  double v_max = 20.0;
  double a_max = 4.0;
  double delta_max_deg = 30.0;
  double perception_range = 100.0;
  double comm_range = 100.0;

  double road_width() const { return lane_width * lane_count; }
  bool operator==(const WorldConfig&) const = default;
  double lane_center(int lane) const { return lane_width * (lane + 0.5); }
};

enum class ParticipantKind : std::uint8_t { AV = 0, BV = 1, Ped = 2 };

std::string_view to_string(ParticipantKind kind);

struct ParticipantState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // degrees, [0, 360), 0 = east, counter-clockwise
  double v = 0.0;
  int lane = 0;
  ParticipantKind kind = ParticipantKind::AV;

  bool is_vehicle() const { return kind != ParticipantKind::Ped; }
  std::array<double, 3> lane_one_hot() const;
  std::array<double, 3> kind_one_hot() const;
};

struct ControlInput {
  double accel = 0.0;      // m/s^2
  double steer_deg = 0.0;  // front wheel angle
};

/// Neighbor sectors, in the order they appear in the observation vector.
enum class Sector : std::uint8_t { Front, Rear, LeftFront, LeftRear, RightFront, RightRear };

struct RelativeMotion {
  double dd = 0.0;  // longitudinal distance, m (>= 0)
  double dv = 0.0;  // v_ego - v_neighbor, m/s
};

using RelativeMotionFeatures = std::array<RelativeMotion, kNeighborSlots>;

struct VehicleObservation {
  ParticipantState base;
  RelativeMotionFeatures p{};

  std::array<double, kVehicleFeatureDim> flatten() const;
};

std::array<double, kPedFeatureDim> pedestrian_features(const ParticipantState& ped);

/// Participants sensed within the perception range and their graph of
/// communication links. Node rows are the raw 22-wide feature vectors,
/// pedestrians zero-padded.
struct RoadGraph {
  std::vector<std::array<double, kVehicleFeatureDim>> nodes;
  std::vector<std::uint8_t> adjacency;  // row-major n x n

  std::size_t size() const { return nodes.size(); }
  bool edge(std::size_t i, std::size_t j) const { return adjacency[i * nodes.size() + j] != 0; }
};

enum class EventTag : std::uint8_t { LeadBrake = 0, PedCross = 1, CutIn = 2 };
inline constexpr std::size_t kEventKinds = 3;

std::string_view to_string(EventTag tag);

enum class ScenarioId : std::uint8_t { LVEB, OPI, RPC, IJ };

std::string_view to_string(ScenarioId id);
ScenarioId scenario_from_string(std::string_view name);

/// Scripted behavior of a background vehicle or pedestrian.
struct Script {
  enum class Mode : std::uint8_t { Cruise, Parked, Brake, CutIn, Standing, Walk, Done };
  enum class Trigger : std::uint8_t { None, Time, Proximity };

  Mode mode = Mode::Cruise;
  Mode on_trigger = Mode::Cruise;
  Trigger trigger = Trigger::None;
  double trigger_value = 0.0;  // seconds for Time, meters for Proximity
  std::optional<EventTag> tag;
  bool fired = false;
  double fired_at = 0.0;

  double brake_decel = 6.0;
  double cut_in_speed = 6.0;
  double cut_in_accel = 2.5;
  double ramp_duration = 2.0;
  double ramp_from_y = 0.0;
  double ramp_to_y = 0.0;
  double walk_speed = 1.5;
  double walk_until_y = 0.0;
};

struct Participant {
  ParticipantState state;
  Script script;
  ControlInput last_control;
  double last_lat_accel = 0.0;
  double last_lane_change_t = -1e9;
  bool exited = false;
};

struct ActiveEvent {
  EventTag tag;
  std::size_t source;
};

struct EpisodeStatus {
  enum class Outcome : std::uint8_t { Running, Collision, Success, Timeout };
  Outcome outcome = Outcome::Running;
  std::optional<std::pair<std::size_t, std::size_t>> collided_pair;
  /// Set when an AV left the drivable surface; collided_pair then holds (i, i).
  bool road_departure = false;

  bool done() const { return outcome != Outcome::Running; }
  bool av_collision(std::span<const Participant> participants) const;
};

std::string_view to_string(EpisodeStatus::Outcome outcome);

/// Discrete-time traffic world. Participants are ordered AVs, then BVs,
/// then pedestrians; indices are stable for the whole episode.
class World {
 public:
  World(WorldConfig config, ScenarioId scenario, std::vector<Participant> participants,
        double exit_x, int horizon);

  const WorldConfig& config() const { return config_; }
  ScenarioId scenario() const { return scenario_; }
  double time() const { return t_; }
  int step_count() const { return steps_; }
  int horizon() const { return horizon_; }
  double exit_x() const { return exit_x_; }

  std::span<const Participant> participants() const { return participants_; }
  std::vector<ParticipantState> states() const;
  const Participant& participant(std::size_t i) const { return participants_.at(i); }
  std::size_t av_count() const { return n_avs_; }
  std::size_t vehicle_count() const;
  std::size_t ped_count() const;

  const std::vector<ActiveEvent>& events() const { return events_; }
  bool event_active(EventTag tag) const;

  /// Fires scripted triggers whose condition holds at the current state and
  /// returns the tags that became active on this call.
  std::vector<EventTag> trigger_events();

  /// Advances one dt. `av_controls` has one entry per AV; exited AVs ignore
  /// theirs and keep cruising straight.
  void step(std::span<const ControlInput> av_controls);

  /// Test hook: overwrite a participant's state (lane is re-derived).
  void set_state(std::size_t i, const ParticipantState& s);

 private:
  void advance_script(Participant& p);
  void refresh_events();

  WorldConfig config_;
  ScenarioId scenario_;
  std::vector<Participant> participants_;
  std::vector<ActiveEvent> events_;
  std::size_t n_avs_ = 0;
  double exit_x_;
  int horizon_;
  double t_ = 0.0;
  int steps_ = 0;
};

int lane_from_y(double y, const WorldConfig& config);
double wrap_degrees(double theta);
/// Heading relative to the lane direction (east), in (-180, 180].
double heading_deviation(double theta);

/// Kinematic bicycle, forward Euler: position integrates the pre-step
/// speed and heading, then heading and speed are updated.
ParticipantState step_vehicle(const ParticipantState& state, ControlInput control, double dt,
                              const WorldConfig& config);

double lateral_acceleration(double v, double steer_deg, const WorldConfig& config);

RelativeMotionFeatures relative_motion_features(const ParticipantState& ego,
                                                std::span<const ParticipantState> others,
                                                double perception_range);

VehicleObservation observe_vehicle(std::span<const ParticipantState> all, std::size_t ego,
                                   double perception_range);

RoadGraph build_topology(std::span<const ParticipantState> participants, double comm_range,
                         double perception_range);

std::vector<double> fuse_observations(const World& world);

bool footprints_overlap(const ParticipantState& a, const ParticipantState& b,
                        const WorldConfig& config);

bool off_road(const ParticipantState& s, const WorldConfig& config);

EpisodeStatus check_termination(const World& world, int horizon);

}  // namespace drsrl
