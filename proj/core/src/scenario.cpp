#include "drsrl/scenario.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {

using Ranges = std::map<std::string, Range>;

const Ranges kCommon{
    {"start_x", {45.0, 55.0}},
    {"av_speed", {12.0, 15.0}},
    {"av_spacing", {18.0, 26.0}},
};

Ranges with_common(Ranges specific) {
  specific.insert(kCommon.begin(), kCommon.end());
  return specific;
}

const Ranges kLveb = with_common({
    {"lead_gap", {24.0, 34.0}},
    {"lead_speed", {12.0, 15.0}},
    {"trigger_time", {1.0, 3.0}},
    {"rear_bv_offset", {-25.0, -8.0}},
    {"rear_bv_speed", {13.0, 16.0}},
    {"exit_distance", {220.0, 220.0}},
});

const Ranges kOpi = with_common({
    {"occluder_x", {110.0, 150.0}},
    {"ped_ahead", {3.0, 7.0}},
    {"ped_y", {1.0, 1.4}},
    {"walk_speed", {1.3, 1.8}},
    {"trigger_distance", {22.0, 35.0}},
    {"exit_distance", {60.0, 60.0}},
});

const Ranges kRpc = with_common({
    {"parked_x", {110.0, 150.0}},
    {"trigger_distance", {15.0, 28.0}},
    {"cut_in_speed", {5.0, 7.0}},
    {"exit_distance", {70.0, 70.0}},
});

const Ranges kIj = with_common({
    {"crosswalk_x", {110.0, 150.0}},
    {"walk_speed", {1.2, 1.8}},
    {"trigger_distance", {25.0, 40.0}},
    {"exit_distance", {50.0, 50.0}},
});

// Portable uniform draw: identical streams across standard libraries.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double operator()(Range r) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return r.lo + (r.hi - r.lo) * u;
  }

 private:
  std::mt19937_64 rng_;
};

Participant make(ParticipantKind kind, double x, double y, double theta, double v) {
  Participant p;
  p.state.kind = kind;
  p.state.x = x;
  p.state.y = y;
  p.state.theta = theta;
  p.state.v = v;
  return p;
}

std::vector<int> av_lane_pattern(ScenarioId id) {
  switch (id) {
    case ScenarioId::LVEB: return {1, 1, 0};
    case ScenarioId::OPI: return {1, 2};
    case ScenarioId::RPC: return {0, 1};
    case ScenarioId::IJ: return {0, 1};
  }
  return {1};
}

}  // namespace

const std::map<std::string, Range>& ScenarioSpec::default_ranges(ScenarioId id) {
  switch (id) {
    case ScenarioId::LVEB: return kLveb;
    case ScenarioId::OPI: return kOpi;
    case ScenarioId::RPC: return kRpc;
    case ScenarioId::IJ: return kIj;
  }
  return kLveb;
}

ScenarioSpec ScenarioSpec::defaults(ScenarioId id) {
  ScenarioSpec spec;
  spec.id = id;
  spec.n_avs = 2;
  switch (id) {
    case ScenarioId::LVEB:
      spec.n_bvs = 2;
      spec.n_peds = 0;
      spec.horizon = 200;
      break;
    case ScenarioId::OPI:
      spec.n_bvs = 1;
      spec.n_peds = 1;
      spec.horizon = 200;
      break;
    case ScenarioId::RPC:
      spec.n_bvs = 1;
      spec.n_peds = 0;
      spec.horizon = 200;
      break;
    case ScenarioId::IJ:
      spec.n_bvs = 0;
      spec.n_peds = 3;
      spec.horizon = 250;
      break;
  }
  return spec;
}

Range ScenarioSpec::range(const std::string& key) const {
  if (auto it = randomization.find(key); it != randomization.end()) return it->second;
  const auto& defaults = default_ranges(id);
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  throw ConfigError("scenario " + std::string(to_string(id)) + " has no randomization key '" + key + "'");
}

void ScenarioSpec::validate() const {
  if (horizon <= 0) throw ConfigError("scenario horizon must be positive");
  if (n_avs < 1) throw ConfigError("scenario needs at least one AV");
  if (n_bvs < 0 || n_peds < 0) throw ConfigError("participant counts must be nonnegative");
  const auto& defaults = default_ranges(id);
  for (const auto& [key, r] : randomization) {
    if (!defaults.contains(key)) {
      throw ConfigError("unknown randomization key '" + key + "' for scenario " +
                        std::string(to_string(id)));
    }
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
      throw ConfigError("invalid range for '" + key + "': [" + std::to_string(r.lo) + ", " +
                        std::to_string(r.hi) + "]");
    }
  }
}

World instantiate_scenario(const ScenarioSpec& spec, const WorldConfig& config) {
  spec.validate();
  Draw draw(spec.seed);

  const double start_x = draw(spec.range("start_x"));
  const double av_speed = draw(spec.range("av_speed"));
  const double spacing = draw(spec.range("av_spacing"));
  const auto lanes = av_lane_pattern(spec.id);

  std::vector<Participant> avs;
  for (int i = 0; i < spec.n_avs; ++i) {
    const int lane = lanes[static_cast<std::size_t>(i) % lanes.size()];
    avs.push_back(make(ParticipantKind::AV, start_x - i * spacing, config.lane_center(lane), 0.0, av_speed));
  }

  std::vector<Participant> bvs;
  std::vector<Participant> peds;
  double exit_x = start_x;
  const double road_top = config.road_width();

  switch (spec.id) {
    case ScenarioId::LVEB: {
      const double gap = draw(spec.range("lead_gap"));
      const double lead_speed = draw(spec.range("lead_speed"));
      const double trigger = draw(spec.range("trigger_time"));
      const double rear_offset = draw(spec.range("rear_bv_offset"));
      const double rear_speed = draw(spec.range("rear_bv_speed"));
      exit_x = start_x + draw(spec.range("exit_distance"));
      if (spec.n_bvs >= 1) {
        auto lead = make(ParticipantKind::BV, start_x + gap + config.vehicle_length, config.lane_center(1),
                         0.0, lead_speed);
        lead.script.trigger = Script::Trigger::Time;
        lead.script.trigger_value = trigger;
        lead.script.on_trigger = Script::Mode::Brake;
        lead.script.tag = EventTag::LeadBrake;
        bvs.push_back(lead);
      }
      if (spec.n_bvs >= 2) {
        bvs.push_back(make(ParticipantKind::BV, start_x + rear_offset, config.lane_center(2), 0.0, rear_speed));
      }
      for (int k = 2; k < spec.n_bvs; ++k) {
        bvs.push_back(make(ParticipantKind::BV, start_x + 40.0 * k, config.lane_center(2), 0.0, rear_speed));
      }
      for (int k = 0; k < spec.n_peds; ++k) {
        auto ped = make(ParticipantKind::Ped, exit_x - 20.0 + 1.2 * k, road_top + 2.0, 90.0, 0.0);
        ped.script.mode = Script::Mode::Standing;
        peds.push_back(ped);
      }
      break;
    }
    case ScenarioId::OPI: {
      const double occ_x = draw(spec.range("occluder_x"));
      const double ahead = draw(spec.range("ped_ahead"));
      const double ped_y = draw(spec.range("ped_y"));
      const double walk = draw(spec.range("walk_speed"));
      const double trig = draw(spec.range("trigger_distance"));
      exit_x = occ_x + draw(spec.range("exit_distance"));
      for (int k = 0; k < spec.n_bvs; ++k) {
        auto occ = make(ParticipantKind::BV, occ_x - 8.0 * k, config.lane_center(0), 0.0, 0.0);
        occ.script.mode = Script::Mode::Parked;
        bvs.push_back(occ);
      }
      const double ped_x0 = occ_x + config.vehicle_length / 2 + ahead;
      for (int k = 0; k < spec.n_peds; ++k) {
        auto ped = make(ParticipantKind::Ped, ped_x0 + 1.0 * k, ped_y, 90.0, 0.0);
        ped.script.mode = Script::Mode::Standing;
        ped.script.on_trigger = Script::Mode::Walk;
        ped.script.trigger = Script::Trigger::Proximity;
        ped.script.trigger_value = trig + 1.0 * k;
        ped.script.walk_speed = walk;
        ped.script.walk_until_y = road_top + 1.0;
        ped.script.tag = EventTag::PedCross;
        peds.push_back(ped);
      }
      break;
    }
    case ScenarioId::RPC: {
      const double parked_x = draw(spec.range("parked_x"));
      const double trig = draw(spec.range("trigger_distance"));
      const double cut_speed = draw(spec.range("cut_in_speed"));
      exit_x = parked_x + draw(spec.range("exit_distance"));
      for (int k = 0; k < spec.n_bvs; ++k) {
        auto bv = make(ParticipantKind::BV, parked_x - 9.0 * k, -2.0, 0.0, 0.0);
        bv.script.mode = Script::Mode::Parked;
        if (k == 0) {
          bv.script.on_trigger = Script::Mode::CutIn;
          bv.script.trigger = Script::Trigger::Proximity;
          bv.script.trigger_value = trig;
          bv.script.cut_in_speed = cut_speed;
          bv.script.ramp_to_y = config.lane_center(0);
          bv.script.tag = EventTag::CutIn;
        }
        bvs.push_back(bv);
      }
      for (int k = 0; k < spec.n_peds; ++k) {
        auto ped = make(ParticipantKind::Ped, parked_x + 30.0 + 1.2 * k, -3.0, 90.0, 0.0);
        ped.script.mode = Script::Mode::Standing;
        peds.push_back(ped);
      }
      break;
    }
    case ScenarioId::IJ: {
      const double cw_x = draw(spec.range("crosswalk_x"));
      const double trig = draw(spec.range("trigger_distance"));
      exit_x = cw_x + draw(spec.range("exit_distance"));
      for (int k = 0; k < spec.n_bvs; ++k) {
        bvs.push_back(make(ParticipantKind::BV, exit_x + 30.0 + 15.0 * k, config.lane_center(2), 0.0, av_speed));
      }
      const double spread = 1.2;
      const double first_x = cw_x - spread * (spec.n_peds - 1) / 2.0;
      for (int k = 0; k < spec.n_peds; ++k) {
        const double walk = draw(spec.range("walk_speed"));
        auto ped = make(ParticipantKind::Ped, first_x + spread * k, -1.0, 90.0, 0.0);
        ped.script.mode = Script::Mode::Standing;
        ped.script.on_trigger = Script::Mode::Walk;
        ped.script.trigger = Script::Trigger::Proximity;
        // Offsets make the whole group start on the same step.
        ped.script.trigger_value = trig + spread * k;
        ped.script.walk_speed = walk;
        ped.script.walk_until_y = road_top + 1.0;
        ped.script.tag = EventTag::PedCross;
        peds.push_back(ped);
      }
      break;
    }
  }

  std::vector<Participant> all;
  all.reserve(avs.size() + bvs.size() + peds.size());
  all.insert(all.end(), avs.begin(), avs.end());
  all.insert(all.end(), bvs.begin(), bvs.end());
  all.insert(all.end(), peds.begin(), peds.end());
  return World(config, spec.id, std::move(all), exit_x, spec.horizon);
}

}  // namespace drsrl
