#include "drsrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "drsrl/errors.hpp"

namespace drsrl {

void ActionDistribution::validate(double tol) const {
  if (probs.empty()) throw DimensionError("action distribution is empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw NumericalError("action distribution has a negative or non-finite entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol) throw NumericalError("action distribution sums to " + std::to_string(sum));
}

std::size_t ActionDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

ActionDistribution masked_softmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  if (logits.size() != mask.size()) throw DimensionError("masked_softmax: logits and mask differ in size");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) top = std::max(top, logits[i]);
  }
  if (!std::isfinite(top)) throw NumericalError("masked_softmax: no feasible action or non-finite logits");
  ActionDistribution d;
  d.probs.assign(logits.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      d.probs[i] = std::exp(logits[i] - top);
      z += d.probs[i];
    }
  }
  for (double& p : d.probs) p /= z;
  return d;
}

ActionDistribution hybrid(const ActionDistribution& task, const ActionDistribution& safe, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidStateError("hybrid: alpha must lie in [0, 1]");
  if (task.size() != safe.size()) throw DimensionError("hybrid: distributions differ in size");
  ActionDistribution out;
  out.probs.resize(task.size());
  // (1 - a) t + a s equals t + a (s - t) and is exact at both endpoints.
  for (std::size_t i = 0; i < task.size(); ++i) {
    out.probs[i] = (1.0 - alpha) * task.probs[i] + alpha * safe.probs[i];
  }
  return out;
}

SampledAction sample_action(const ActionDistribution& dist, Rng& rng) {
  double total = 0.0;
  for (double p : dist.probs) total += p;
  if (!(total > 0.0)) throw NumericalError("sample_action: distribution has no mass");
  const double u = rng.uniform() * total;
  double cum = 0.0;
  std::size_t chosen = dist.size();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    cum += dist.probs[i];
    chosen = i;
    if (u < cum) break;
  }
  return {chosen, std::log(dist.probs[chosen])};
}

double kl_divergence(const ActionDistribution& p, const ActionDistribution& q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.probs[i] > 0.0) kl += p.probs[i] * (std::log(p.probs[i]) - std::log(q.probs[i]));
  }
  return kl;
}

Eigen::VectorXd normalize_node(std::span<const double> row, std::span<const double> ego_row, const WorldConfig& config) {
  if (row.size() != kVehicleFeatureDim || ego_row.size() != kVehicleFeatureDim) {
    throw DimensionError("normalize_node: rows must be 22 wide");
  }
  Eigen::VectorXd out(kVehicleFeatureDim);
  out[0] = (row[0] - ego_row[0]) / 50.0;
  out[1] = row[1] / config.road_width();
  out[2] = heading_deviation(row[2]) / 90.0;
  out[3] = row[3] / config.v_max;
  for (std::size_t i = 4; i < 10; ++i) out[static_cast<Eigen::Index>(i)] = row[i];
  for (std::size_t j = 0; j < kNeighborSlots; ++j) {
    out[static_cast<Eigen::Index>(10 + 2 * j)] = row[10 + 2 * j] / config.perception_range;
    out[static_cast<Eigen::Index>(11 + 2 * j)] = row[11 + 2 * j] / 10.0;
  }
  return out;
}

AgentInput encode_agent(const RoadGraph& graph, std::size_t ego, const WorldConfig& config) {
  if (ego >= graph.size()) throw DimensionError("encode_agent: ego index out of range");
  const auto& ego_row = graph.nodes[ego];
  AgentInput in;
  in.self = normalize_node(ego_row, ego_row, config);
  in.mean = Eigen::VectorXd::Zero(kVehicleFeatureDim);
  int count = 0;
  for (std::size_t j = 0; j < graph.size(); ++j) {
    if (!graph.edge(ego, j)) continue;
    in.mean += j == ego ? in.self : normalize_node(graph.nodes[j], ego_row, config);
    ++count;
  }
  in.mean /= static_cast<double>(count);
  return in;
}

std::vector<AgentInput> encode_agents(const World& world) {
  const auto states = world.states();
  const auto graph = build_topology(states, world.config().comm_range, world.config().perception_range);
  std::vector<AgentInput> out;
  out.reserve(world.av_count());
  for (std::size_t i = 0; i < world.av_count(); ++i) out.push_back(encode_agent(graph, i, world.config()));
  return out;
}

NetBatch make_batch(std::span<const AgentInput> inputs, std::span<const std::vector<double>> extra) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  NetBatch b;
  const Eigen::Index width = n > 0 ? inputs[0].self.size() : static_cast<Eigen::Index>(kVehicleFeatureDim);
  b.self.resize(width, n);
  b.mean.resize(width, n);
  const Eigen::Index extra_rows = extra.empty() ? 0 : static_cast<Eigen::Index>(extra[0].size());
  b.extra.resize(extra_rows, extra.empty() ? 0 : n);
  if (!extra.empty() && extra.size() != inputs.size()) throw DimensionError("make_batch: extra inputs count mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    b.self.col(i) = inputs[static_cast<std::size_t>(i)].self;
    b.mean.col(i) = inputs[static_cast<std::size_t>(i)].mean;
    if (extra_rows > 0) {
      b.extra.col(i) = Eigen::Map<const Eigen::VectorXd>(extra[static_cast<std::size_t>(i)].data(), extra_rows);
    }
  }
  return b;
}

PolicyModels PolicyModels::create(Rng& rng, double norm_cap, ApproximatorSpec task_spec, ApproximatorSpec safe_spec) {
  PolicyModels m{Approximator(std::move(task_spec)), Approximator(std::move(safe_spec)), {}, {}};
  const auto task_n = static_cast<double>(m.task_net.param_count());
  const auto safe_n = static_cast<double>(m.safe_net.param_count());
  if (safe_n > kSafetyBudget * task_n) {
    throw ConfigError("safety model has " + std::to_string(m.safe_net.param_count()) + " parameters, over 27% of " +
                      std::to_string(m.task_net.param_count()));
  }
  if (m.safe_net.spec().extra_inputs != m.task_net.spec().n_actions) {
    throw DimensionError("safety model must consume the task logits");
  }
  m.task = {m.task_net.initialize(rng), norm_cap};
  m.safe = {m.safe_net.initialize(rng), kSafetyBudget * norm_cap};
  project_in_place(m.task);
  project_in_place(m.safe);
  return m;
}

ActionDistribution task_policy(const Approximator& net, const ParamSet& params, const AgentInput& input,
                               const ActionMask& mask, std::vector<double>* logits, double* value) {
  const std::array<AgentInput, 1> one{input};
  const auto out = net.forward(params.values, make_batch(one));
  std::vector<double> l(out.logits.data(), out.logits.data() + out.logits.size());
  auto dist = masked_softmax(l, mask);
  if (logits) *logits = std::move(l);
  if (value) *value = out.value[0];
  return dist;
}

ActionDistribution safe_policy(const Approximator& net, const ParamSet& params, const AgentInput& input,
                               std::span<const double> task_logits, const ActionMask& mask,
                               std::vector<double>* logits, double* value) {
  const std::array<AgentInput, 1> one{input};
  const std::array<std::vector<double>, 1> extra{std::vector<double>(task_logits.begin(), task_logits.end())};
  const auto out = net.forward(params.values, make_batch(one, extra));
  std::vector<double> l(out.logits.data(), out.logits.data() + out.logits.size());
  auto dist = masked_softmax(l, mask);
  if (logits) *logits = std::move(l);
  if (value) *value = out.value[0];
  return dist;
}

PolicyEval evaluate_policies(const PolicyModels& models, const AgentInput& input, const ActionMask& mask,
                             bool with_safety) {
  PolicyEval e;
  e.task = task_policy(models.task_net, models.task, input, mask, &e.task_logits, &e.task_value);
  if (with_safety) {
    e.safe = safe_policy(models.safe_net, models.safe, input, e.task_logits, mask, &e.safe_logits, &e.safe_value);
  }
  return e;
}

}  // namespace drsrl
