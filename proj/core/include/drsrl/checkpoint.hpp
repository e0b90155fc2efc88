#pragma once

#include <optional>
#include <string>

#include "drsrl/actions.hpp"
#include "drsrl/config.hpp"
#include "drsrl/nn.hpp"
#include "drsrl/policy.hpp"

namespace drsrl {

inline constexpr int kCheckpointVersion = 1;

/// Everything a policy needs at evaluation time. Only DRS-PPO checkpoints
/// carry a safety model.
struct Checkpoint {
  Algorithm algorithm = Algorithm::DrsPpo;
  ActionTable actions;
  ApproximatorSpec task_spec;
  ParamSet task;
  std::optional<ApproximatorSpec> safe_spec;
  std::optional<ParamSet> safe;
  int episodes_trained = 0;

  bool operator==(const Checkpoint&) const;
};

/// Text format with hexadecimal floats, so reload is bit-exact.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Task and safety models of a DRS-PPO checkpoint.
PolicyModels models_from_checkpoint(const Checkpoint& ckpt);

}  // namespace drsrl
