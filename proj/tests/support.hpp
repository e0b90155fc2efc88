#pragma once

#include <utility>
#include <vector>

#include "drsrl/world.hpp"

namespace drsrl::test {

inline Participant vehicle(ParticipantKind kind, double x, double y, double v, double theta = 0.0) {
  Participant p;
  p.state.kind = kind;
  p.state.x = x;
  p.state.y = y;
  p.state.v = v;
  p.state.theta = theta;
  return p;
}

inline Participant av(double x, double y, double v, double theta = 0.0) {
  return vehicle(ParticipantKind::AV, x, y, v, theta);
}

inline Participant bv(double x, double y, double v, double theta = 0.0) {
  return vehicle(ParticipantKind::BV, x, y, v, theta);
}

inline Participant ped(double x, double y, double v = 0.0, double theta = 90.0) {
  Participant p = vehicle(ParticipantKind::Ped, x, y, v, theta);
  p.script.mode = Script::Mode::Standing;
  return p;
}

inline World world_of(std::vector<Participant> ps, double exit_x = 1000.0, int horizon = 200,
                      ScenarioId id = ScenarioId::LVEB) {
  return World(WorldConfig{}, id, std::move(ps), exit_x, horizon);
}

}  // namespace drsrl::test
