#include "drsrl/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "drsrl/dqn.hpp"
#include "drsrl/errors.hpp"
#include "drsrl/trainer.hpp"

namespace drsrl {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigError("trajectory: bad number '" + s + "'");
  return v;
}

long to_long(const std::string& s) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ConfigError("trajectory: bad integer '" + s + "'");
  return v;
}

std::size_t feasible_argmax(std::span<const double> q, const ActionMask& mask) {
  std::size_t best = 0;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k] && q[k] > best_q) {
      best_q = q[k];
      best = k;
    }
  }
  return best;
}

}  // namespace

MetricsRow compute_metrics(const std::vector<TrajectoryRow>& rows) {
  MetricsRow m;
  if (rows.empty()) return m;
  double speed = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  double duration = 0.0;
  double reward = 0.0;
  int collided = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    speed += r.v;
    lat += std::abs(r.a_lat);
    lon += std::abs(r.accel);
    const bool first = i == 0 || rows[i - 1].seed != r.seed || rows[i - 1].episode != r.episode;
    if (first) {
      ++m.episodes;
      collided += r.ep_collision;
      duration += r.ep_duration;
      reward += r.ep_normalized_return;
    }
  }
  const auto n = static_cast<double>(rows.size());
  const auto e = static_cast<double>(m.episodes);
  m.CR = 100.0 * collided / e;
  m.AS = speed / n;
  m.TT = duration / e;
  m.ALA = lat / n;
  m.ALO = lon / n;
  m.reward = reward / e;
  return m;
}

std::string trajectory_header() {
  return "seed,episode,step,t,agent,x,y,theta,v,accel,steer,a_lat,action,r_task,r_safe,risk,alpha,"
         "ep_collision,ep_duration,ep_normalized_return,ep_outcome";
}

std::string format_trajectory_row(const TrajectoryRow& r) {
  std::ostringstream os;
  os << r.seed << ',' << r.episode << ',' << r.step << ',' << fmt(r.t) << ',' << r.agent << ',' << fmt(r.x) << ','
     << fmt(r.y) << ',' << fmt(r.theta) << ',' << fmt(r.v) << ',' << fmt(r.accel) << ',' << fmt(r.steer) << ','
     << fmt(r.a_lat) << ',' << r.action << ',' << fmt(r.r_task) << ',' << fmt(r.r_safe) << ',' << fmt(r.risk) << ','
     << fmt(r.alpha) << ',' << r.ep_collision << ',' << fmt(r.ep_duration) << ',' << fmt(r.ep_normalized_return)
     << ',' << r.ep_outcome;
  return os.str();
}

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trajectory '" + path + "'");
  out << trajectory_header() << '\n';
  for (const auto& r : rows) out << format_trajectory_row(r) << '\n';
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != trajectory_header()) {
    throw ConfigError("trajectory '" + path + "' has an unexpected header");
  }
  std::vector<TrajectoryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 21) throw ConfigError("trajectory row has " + std::to_string(f.size()) + " fields: " + line);
    TrajectoryRow r;
    r.seed = std::strtoull(f[0].c_str(), nullptr, 10);
    r.episode = static_cast<int>(to_long(f[1]));
    r.step = static_cast<int>(to_long(f[2]));
    r.t = to_double(f[3]);
    r.agent = static_cast<int>(to_long(f[4]));
    r.x = to_double(f[5]);
    r.y = to_double(f[6]);
    r.theta = to_double(f[7]);
    r.v = to_double(f[8]);
    r.accel = to_double(f[9]);
    r.steer = to_double(f[10]);
    r.a_lat = to_double(f[11]);
    r.action = static_cast<int>(to_long(f[12]));
    r.r_task = to_double(f[13]);
    r.r_safe = to_double(f[14]);
    r.risk = to_double(f[15]);
    r.alpha = to_double(f[16]);
    r.ep_collision = static_cast<int>(to_long(f[17]));
    r.ep_duration = to_double(f[18]);
    r.ep_normalized_return = to_double(f[19]);
    r.ep_outcome = f[20];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string metrics_header() { return "episodes,CR,AS,TT,ALA,ALO,reward"; }

std::string format_metrics(const MetricsRow& m) {
  return std::to_string(m.episodes) + ',' + fmt(m.CR) + ',' + fmt(m.AS) + ',' + fmt(m.TT) + ',' + fmt(m.ALA) + ',' +
         fmt(m.ALO) + ',' + fmt(m.reward);
}

Controller greedy_controller(const Checkpoint& ckpt, const RiskConfig& risk) {
  auto task_net = std::make_shared<Approximator>(ckpt.task_spec);
  auto task = std::make_shared<ParamSet>(ckpt.task);
  switch (ckpt.algorithm) {
    case Algorithm::DrsPpo: {
      auto safe_net = std::make_shared<Approximator>(*ckpt.safe_spec);
      auto safe = std::make_shared<ParamSet>(*ckpt.safe);
      return [=](const DecisionContext& c) {
        std::vector<double> logits;
        const auto pt = task_policy(*task_net, *task, c.input, c.mask, &logits);
        const auto ps = safe_policy(*safe_net, *safe, c.input, logits, c.mask);
        return hybrid(pt, ps, safety_weight(c.risk, risk)).argmax();
      };
    }
    case Algorithm::Cppo:
      return [=](const DecisionContext& c) { return task_policy(*task_net, *task, c.input, c.mask).argmax(); };
    case Algorithm::Cdqn:
    case Algorithm::Cd3qn: {
      const DqnVariant variant = ckpt.algorithm == Algorithm::Cd3qn ? DqnVariant::DoubleDueling : DqnVariant::Plain;
      return [=](const DecisionContext& c) {
        const NetOutput out = task_net->forward(task->values, make_batch(std::span(&c.input, 1)));
        const Eigen::MatrixXd q = q_values(out, variant);
        return feasible_argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())), c.mask);
      };
    }
  }
  throw ConfigError("unsupported algorithm in checkpoint");
}

EvalResult evaluate(const Controller& controller, const RunConfig& config, int n_episodes,
                    const std::vector<std::uint64_t>& seeds) {
  if (n_episodes <= 0) throw ConfigError("evaluation needs at least one episode");
  if (seeds.empty()) throw ConfigError("evaluation needs at least one seed");
  const ActionTable actions(config.world.a_max, config.world.delta_max_deg);
  const ReturnBounds bounds = config.bounds();
  EvalResult result;
  for (const std::uint64_t seed : seeds) {
    for (int e = 0; e < n_episodes; ++e) {
      World world = make_world(config, evaluation_episode_seed(seed, e));
      const std::size_t n = world.av_count();
      Observation obs = observe(world, config, actions);
      std::vector<ControlInput> controls(n);
      std::vector<TrajectoryRow> rows;
      double ret = 0.0;
      EpisodeStatus status;
      int step = 0;
      while (true) {
        const double alpha = safety_weight(obs.risk, config.risk);
        std::vector<int> chosen(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
          controls[i] = ControlInput{};
          if (!obs.active[i]) continue;
          const std::size_t a = controller({world, i, obs.inputs[i], obs.masks[i], obs.risk});
          if (a >= actions.size() || !obs.masks[i][a]) {
            throw InvalidStateError("controller chose infeasible action " + std::to_string(a));
          }
          chosen[i] = static_cast<int>(a);
          controls[i] = actions.control(a);
        }
        const StepResult res = advance(world, controls, config);
        ++step;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] < 0) continue;
          const Participant& p = world.participant(i);
          TrajectoryRow r;
          r.seed = seed;
          r.episode = e;
          r.step = step;
          r.t = world.time();
          r.agent = static_cast<int>(i);
          r.x = p.state.x;
          r.y = p.state.y;
          r.theta = p.state.theta;
          r.v = p.state.v;
          r.accel = p.last_control.accel;
          r.steer = p.last_control.steer_deg;
          r.a_lat = p.last_lat_accel;
          r.action = chosen[i];
          r.r_task = res.rewards[i].r_task;
          r.r_safe = res.rewards[i].r_safe;
          r.risk = obs.risk;
          r.alpha = alpha;
          ret += r.r_task;
          rows.push_back(std::move(r));
        }
        if (res.status.done()) {
          status = res.status;
          break;
        }
        obs = observe(world, config, actions);
      }
      const int collided = status.av_collision(world.participants()) ? 1 : 0;
      const double norm = normalized_return(ret / static_cast<double>(n), bounds);
      for (auto& r : rows) {
        r.ep_collision = collided;
        r.ep_duration = world.time();
        r.ep_normalized_return = norm;
        r.ep_outcome = std::string(to_string(status.outcome));
      }
      result.trajectory.insert(result.trajectory.end(), std::make_move_iterator(rows.begin()),
                               std::make_move_iterator(rows.end()));
    }
  }
  result.metrics = compute_metrics(result.trajectory);
  return result;
}

EvalResult evaluate_checkpoint(const Checkpoint& ckpt, const RunConfig& config, int n_episodes,
                               const std::vector<std::uint64_t>& seeds) {
  const ActionTable actions(config.world.a_max, config.world.delta_max_deg);
  if (!(ckpt.actions == actions)) throw ConfigError("checkpoint action table does not match the run configuration");
  if (ckpt.task_spec.node_width != static_cast<int>(kVehicleFeatureDim) ||
      ckpt.task_spec.n_actions != static_cast<int>(actions.size())) {
    throw DimensionError("checkpoint network does not match the observation or action sizes");
  }
  return evaluate(greedy_controller(ckpt, config.risk), config, n_episodes, seeds);
}

std::vector<Transition> collect_transitions(const Checkpoint& ckpt, const RunConfig& config, int n_episodes,
                                            std::uint64_t seed) {
  const PolicyModels models = models_from_checkpoint(ckpt);
  const ActionTable actions(config.world.a_max, config.world.delta_max_deg);
  std::vector<Transition> out;
  for (int e = 0; e < n_episodes; ++e) {
    World world = make_world(config, evaluation_episode_seed(seed, e));
    const std::size_t n = world.av_count();
    std::vector<std::vector<Transition>> chains(n);
    Observation obs = observe(world, config, actions);
    std::vector<ControlInput> controls(n);
    for (int step = 0;; ++step) {
      const double alpha = safety_weight(obs.risk, config.risk);
      std::vector<bool> acted(n, false);
      for (std::size_t i = 0; i < n; ++i) {
        controls[i] = ControlInput{};
        if (!obs.active[i]) continue;
        Transition tr;
        tr.input = obs.inputs[i];
        tr.mask = obs.masks[i];
        tr.risk = obs.risk;
        tr.alpha = alpha;
        tr.episode = static_cast<std::uint32_t>(e);
        tr.agent = static_cast<std::uint32_t>(i);
        tr.step = static_cast<std::uint32_t>(step);
        PolicyEval ev = evaluate_policies(models, tr.input, tr.mask);
        tr.action = hybrid(ev.task, ev.safe, alpha).argmax();
        tr.task_logits = std::move(ev.task_logits);
        controls[i] = actions.control(tr.action);
        chains[i].push_back(std::move(tr));
        acted[i] = true;
      }
      const StepResult res = advance(world, controls, config);
      const Observation next = observe(world, config, actions);
      const bool terminal = res.status.done() && res.status.outcome != EpisodeStatus::Outcome::Timeout;
      for (std::size_t i = 0; i < n; ++i) {
        if (!acted[i]) continue;
        Transition& tr = chains[i].back();
        tr.r_task = res.rewards[i].r_task;
        tr.r_safe = res.rewards[i].r_safe;
        tr.next_input = next.inputs[i];
        tr.next_mask = next.masks[i];
        tr.done = terminal || !next.active[i];
      }
      if (res.status.done()) break;
      obs = next;
    }
    for (auto& c : chains) out.insert(out.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  return out;
}

double CompareResult::median_cr(Algorithm algo) const {
  std::vector<double> v;
  for (const auto& e : entries) {
    if (e.algorithm == algo) v.push_back(e.metrics.CR);
  }
  if (v.empty()) throw InvalidStateError("no results for " + std::string(to_string(algo)));
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string CompareResult::table() const {
  std::ostringstream os;
  os << "algorithm,seed," << metrics_header() << '\n';
  for (const auto& e : entries) os << to_string(e.algorithm) << ',' << e.seed << ',' << format_metrics(e.metrics) << '\n';
  return os.str();
}

CompareResult compare(const RunConfig& base, const std::vector<Algorithm>& algorithms,
                      const std::vector<std::uint64_t>& seeds, int train_episodes, int eval_episodes,
                      const std::string& out_dir, const std::function<void(const CompareEntry&)>& on_entry) {
  CompareResult result;
  for (const std::uint64_t seed : seeds) {
    for (const Algorithm algo : algorithms) {
      RunConfig cfg = base;
      cfg.algorithm = algo;
      Trainer trainer(cfg, seed);
      trainer.train(train_episodes, out_dir);
      const EvalResult ev = evaluate_checkpoint(trainer.checkpoint(), cfg, eval_episodes, {seed});
      if (!out_dir.empty()) {
        write_trajectory_csv((std::filesystem::path(out_dir) / (std::string(to_string(algo)) + "_eval_seed" +
                                                                std::to_string(seed) + ".csv"))
                                 .string(),
                             ev.trajectory);
      }
      result.entries.push_back({algo, seed, ev.metrics});
      if (on_entry) on_entry(result.entries.back());
    }
  }
  return result;
}

}  // namespace drsrl
