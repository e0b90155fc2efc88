#include "drsrl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "drsrl/errors.hpp"
#include "json.hpp"

namespace drsrl {

using nlohmann::json;

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::DrsPpo: return "drs_ppo";
    case Algorithm::Cppo: return "cppo";
    case Algorithm::Cdqn: return "cdqn";
    case Algorithm::Cd3qn: return "cd3qn";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "drs_ppo") return Algorithm::DrsPpo;
  if (name == "cppo") return Algorithm::Cppo;
  if (name == "cdqn") return Algorithm::Cdqn;
  if (name == "cd3qn") return Algorithm::Cd3qn;
  throw ConfigError("unknown algorithm '" + std::string(name) + "' (expected drs_ppo, cppo, cdqn or cd3qn)");
}

bool is_ppo(Algorithm algo) { return algo == Algorithm::DrsPpo || algo == Algorithm::Cppo; }

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("train.gamma must lie in [0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("train.gae_lambda must lie in [0, 1]");
  if (!(clip_eps > 0.0)) throw ConfigError("train.clip_eps must be positive");
  if (!(lr_task > 0.0) || !(lr_safe > 0.0) || !(dqn_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (batch_size <= 0 || epochs <= 0 || replay_episodes <= 0) {
    throw ConfigError("train.batch_size, epochs and replay_episodes must be positive");
  }
  if (kappa < 0.0 || is_exponent < 0.0) throw ConfigError("train.kappa and is_exponent must be >= 0");
  if (!(norm_cap > 0.0)) throw ConfigError("train.norm_cap must be positive");
  if (!(reward_scale > 0.0)) throw ConfigError("train.reward_scale must be positive");
  if (alpha_override > 1.0) throw ConfigError("train.alpha_override must be <= 1");
  if (dqn_batch <= 0 || dqn_buffer <= 0 || dqn_update_every <= 0 || dqn_target_sync <= 0) {
    throw ConfigError("dqn batch, buffer, update interval and target sync must be positive");
  }
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
}

ReturnBounds default_return_bounds(ScenarioId id) {
  switch (id) {
    case ScenarioId::LVEB: return {-20.0, 40.0};
    case ScenarioId::OPI: return {-20.0, 40.0};
    case ScenarioId::RPC: return {-20.0, 40.0};
    case ScenarioId::IJ: return {-20.0, 40.0};
  }
  return {};
}

double normalized_return(double episode_return, const ReturnBounds& bounds) {
  if (bounds.ref_max == bounds.ref_min) throw ConfigError("normalized_return: ref_max equals ref_min");
  return (episode_return - bounds.ref_min) / (bounds.ref_max - bounds.ref_min);
}

RunConfig RunConfig::for_scenario(ScenarioId id) {
  RunConfig c;
  set_scenario(c, id);
  return c;
}

void set_scenario(RunConfig& config, ScenarioId id) {
  const auto seed = config.scenario.seed;
  config.scenario = ScenarioSpec::defaults(id);
  config.scenario.seed = seed;
  config.reward.mode = RewardConfig::for_scenario(id).mode;
}

ReturnBounds RunConfig::bounds() const {
  const std::string name(to_string(scenario.id));
  if (auto it = return_bounds.find(name); it != return_bounds.end()) return it->second;
  return default_return_bounds(scenario.id);
}

void RunConfig::validate() const {
  if (mode != "train" && mode != "eval" && mode != "diagnose") {
    throw ConfigError("mode must be train, eval or diagnose (got '" + mode + "')");
  }
  if (episodes < 0) throw ConfigError("episodes must be >= 0");
  if (eval_episodes <= 0) throw ConfigError("eval_episodes must be positive");
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (out_dir.empty()) throw ConfigError("out_dir must be nonempty");
  scenario.validate();
  risk.validate();
  reward.validate();
  train.validate();
  for (const auto& [name, b] : return_bounds) {
    scenario_from_string(name);
    if (b.ref_max == b.ref_min) throw ConfigError("return bounds for " + name + " coincide");
  }
  if (scenario.n_avs > 3) throw ConfigError("at most three AVs are supported");
}

namespace {

// Reads fields from a JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError("unknown config key '" + where_ + "." + it.key() + "'");
    }
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for '" + where_ + "." + key + "': " + e.what());
    }
  }
  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json world_json(const WorldConfig& w) {
  return {{"dt", w.dt},
          {"lane_width", w.lane_width},
          {"lane_count", w.lane_count},
          {"vehicle_length", w.vehicle_length},
          {"vehicle_width", w.vehicle_width},
          {"wheelbase", w.wheelbase},
          {"ped_radius", w.ped_radius},
          {"v_max", w.v_max},
          {"a_max", w.a_max},
          {"delta_max_deg", w.delta_max_deg},
          {"perception_range", w.perception_range},
          {"comm_range", w.comm_range}};
}

void read_world(const json& j, WorldConfig& w) {
  Reader r(j, "world");
  r.get("dt", w.dt);
  r.get("lane_width", w.lane_width);
  r.get("lane_count", w.lane_count);
  r.get("vehicle_length", w.vehicle_length);
  r.get("vehicle_width", w.vehicle_width);
  r.get("wheelbase", w.wheelbase);
  r.get("ped_radius", w.ped_radius);
  r.get("v_max", w.v_max);
  r.get("a_max", w.a_max);
  r.get("delta_max_deg", w.delta_max_deg);
  r.get("perception_range", w.perception_range);
  r.get("comm_range", w.comm_range);
  r.finish();
}

json risk_json(const RiskConfig& c) {
  return {{"tau_v2v", c.tau_v2v},   {"tau_v2p", c.tau_v2p},       {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},   {"lambda3", c.lambda3},       {"beta", c.beta},
          {"w0", c.w0},             {"tau_risk", c.tau_risk},     {"alpha0", c.alpha0},
          {"eps_norm", c.eps_norm}, {"event_radius", c.event_radius}, {"path_half_width", c.path_half_width}};
}

void read_risk(const json& j, RiskConfig& c) {
  Reader r(j, "risk");
  r.get("tau_v2v", c.tau_v2v);
  r.get("tau_v2p", c.tau_v2p);
  r.get("lambda1", c.lambda1);
  r.get("lambda2", c.lambda2);
  r.get("lambda3", c.lambda3);
  r.get("beta", c.beta);
  r.get("w0", c.w0);
  r.get("tau_risk", c.tau_risk);
  r.get("alpha0", c.alpha0);
  r.get("eps_norm", c.eps_norm);
  r.get("event_radius", c.event_radius);
  r.get("path_half_width", c.path_half_width);
  r.finish();
}

json reward_json(const RewardConfig& c) {
  return {{"C0", c.C0},
          {"d_safe", c.d_safe},
          {"v_target", c.v_target},
          {"a_lat_max", c.a_lat_max},
          {"a_lon_max", c.a_lon_max},
          {"w_com", c.w_com},
          {"lambda_decay", c.lambda_decay},
          {"delta0_deg", c.delta0_deg},
          {"a0", c.a0},
          {"eps", c.eps},
          {"mode", c.mode == SafetyMode::Avoid ? "avoid" : "brake"}};
}

void read_reward(const json& j, RewardConfig& c) {
  Reader r(j, "reward");
  r.get("C0", c.C0);
  r.get("d_safe", c.d_safe);
  r.get("v_target", c.v_target);
  r.get("a_lat_max", c.a_lat_max);
  r.get("a_lon_max", c.a_lon_max);
  r.get("w_com", c.w_com);
  r.get("lambda_decay", c.lambda_decay);
  r.get("delta0_deg", c.delta0_deg);
  r.get("a0", c.a0);
  r.get("eps", c.eps);
  std::string mode = c.mode == SafetyMode::Avoid ? "avoid" : "brake";
  r.get("mode", mode);
  if (mode == "avoid") {
    c.mode = SafetyMode::Avoid;
  } else if (mode == "brake") {
    c.mode = SafetyMode::Brake;
  } else {
    throw ConfigError("reward.mode must be avoid or brake (got '" + mode + "')");
  }
  r.finish();
}

json mask_json(const MaskConfig& c) {
  return {{"tau_accel", c.tau_accel},
          {"max_heading_dev", c.max_heading_dev},
          {"lane_change_cooldown", c.lane_change_cooldown},
          {"path_half_width", c.path_half_width}};
}

void read_mask(const json& j, MaskConfig& c) {
  Reader r(j, "mask");
  r.get("tau_accel", c.tau_accel);
  r.get("max_heading_dev", c.max_heading_dev);
  r.get("lane_change_cooldown", c.lane_change_cooldown);
  r.get("path_half_width", c.path_half_width);
  r.finish();
}

json train_json(const TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"gae_lambda", c.gae_lambda},
          {"clip_eps", c.clip_eps},
          {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef},
          {"lr_task", c.lr_task},
          {"lr_safe", c.lr_safe},
          {"max_grad_norm", c.max_grad_norm},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"replay_episodes", c.replay_episodes},
          {"kappa", c.kappa},
          {"is_exponent", c.is_exponent},
          {"norm_cap", c.norm_cap},
          {"normalize_advantages", c.normalize_advantages},
          {"reward_scale", c.reward_scale},
          {"alpha_override", c.alpha_override},
          {"uniform_replay", c.uniform_replay},
          {"freeze_safety", c.freeze_safety},
          {"dqn_lr", c.dqn_lr},
          {"dqn_batch", c.dqn_batch},
          {"dqn_buffer", c.dqn_buffer},
          {"dqn_update_every", c.dqn_update_every},
          {"dqn_target_sync", c.dqn_target_sync},
          {"dqn_eps_start", c.dqn_eps_start},
          {"dqn_eps_end", c.dqn_eps_end},
          {"dqn_eps_decay", c.dqn_eps_decay},
          {"checkpoint_every", c.checkpoint_every}};
}

void read_train(const json& j, TrainConfig& c) {
  Reader r(j, "train");
  r.get("gamma", c.gamma);
  r.get("gae_lambda", c.gae_lambda);
  r.get("clip_eps", c.clip_eps);
  r.get("value_coef", c.value_coef);
  r.get("entropy_coef", c.entropy_coef);
  r.get("lr_task", c.lr_task);
  r.get("lr_safe", c.lr_safe);
  r.get("max_grad_norm", c.max_grad_norm);
  r.get("batch_size", c.batch_size);
  r.get("epochs", c.epochs);
  r.get("replay_episodes", c.replay_episodes);
  r.get("kappa", c.kappa);
  r.get("is_exponent", c.is_exponent);
  r.get("norm_cap", c.norm_cap);
  r.get("normalize_advantages", c.normalize_advantages);
  r.get("reward_scale", c.reward_scale);
  r.get("alpha_override", c.alpha_override);
  r.get("uniform_replay", c.uniform_replay);
  r.get("freeze_safety", c.freeze_safety);
  r.get("dqn_lr", c.dqn_lr);
  r.get("dqn_batch", c.dqn_batch);
  r.get("dqn_buffer", c.dqn_buffer);
  r.get("dqn_update_every", c.dqn_update_every);
  r.get("dqn_target_sync", c.dqn_target_sync);
  r.get("dqn_eps_start", c.dqn_eps_start);
  r.get("dqn_eps_end", c.dqn_eps_end);
  r.get("dqn_eps_decay", c.dqn_eps_decay);
  r.get("checkpoint_every", c.checkpoint_every);
  r.finish();
}

json spec_json(const ApproximatorSpec& s) {
  return {{"node_width", s.node_width},
          {"graph_hidden", s.graph_hidden},
          {"trunk_hidden", s.trunk_hidden},
          {"extra_inputs", s.extra_inputs},
          {"n_actions", s.n_actions}};
}

void read_spec(const json& j, ApproximatorSpec& s, const std::string& where) {
  Reader r(j, where);
  r.get("node_width", s.node_width);
  r.get("graph_hidden", s.graph_hidden);
  r.get("trunk_hidden", s.trunk_hidden);
  r.get("extra_inputs", s.extra_inputs);
  r.get("n_actions", s.n_actions);
  r.finish();
}

json scenario_json(const ScenarioSpec& s) {
  json ranges = json::object();
  for (const auto& [k, v] : s.randomization) ranges[k] = json::array({v.lo, v.hi});
  return {{"id", std::string(to_string(s.id))},
          {"n_avs", s.n_avs},
          {"n_bvs", s.n_bvs},
          {"n_peds", s.n_peds},
          {"horizon", s.horizon},
          {"seed", s.seed},
          {"randomization", ranges}};
}

void read_scenario(const json& j, ScenarioSpec& s) {
  Reader r(j, "scenario");
  r.get("n_avs", s.n_avs);
  r.get("n_bvs", s.n_bvs);
  r.get("n_peds", s.n_peds);
  r.get("horizon", s.horizon);
  r.get("seed", s.seed);
  if (const json* ranges = r.child("randomization")) {
    if (!ranges->is_object()) throw ConfigError("scenario.randomization must be an object");
    s.randomization.clear();
    for (auto it = ranges->begin(); it != ranges->end(); ++it) {
      const auto v = it.value().get<std::vector<double>>();
      if (v.size() != 2) throw ConfigError("scenario.randomization." + it.key() + " must be [lo, hi]");
      s.randomization[it.key()] = {v[0], v[1]};
    }
  }
  r.child("id");
  r.finish();
}

}  // namespace

std::string to_json(const RunConfig& c) {
  json bounds = json::object();
  for (const auto& [k, b] : c.return_bounds) bounds[k] = json::array({b.ref_min, b.ref_max});
  const json j = {{"mode", c.mode},
                  {"algorithm", std::string(to_string(c.algorithm))},
                  {"episodes", c.episodes},
                  {"eval_episodes", c.eval_episodes},
                  {"seeds", c.seeds},
                  {"out_dir", c.out_dir},
                  {"scenario", scenario_json(c.scenario)},
                  {"world", world_json(c.world)},
                  {"risk", risk_json(c.risk)},
                  {"reward", reward_json(c.reward)},
                  {"mask", mask_json(c.mask)},
                  {"train", train_json(c.train)},
                  {"task_spec", spec_json(c.task_spec)},
                  {"safe_spec", spec_json(c.safe_spec)},
                  {"return_bounds", bounds}};
  return j.dump(2);
}

RunConfig run_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig c;
  {
    Reader r(j, "config");
    // The scenario id decides the defaults the remaining keys override.
    if (const json* s = r.child("scenario"); s && s->is_object() && s->contains("id")) {
      set_scenario(c, scenario_from_string(s->at("id").get<std::string>()));
    }
    r.get("mode", c.mode);
    std::string algo(to_string(c.algorithm));
    r.get("algorithm", algo);
    c.algorithm = algorithm_from_string(algo);
    r.get("episodes", c.episodes);
    r.get("eval_episodes", c.eval_episodes);
    r.get("seeds", c.seeds);
    r.get("out_dir", c.out_dir);
    if (const json* s = r.child("scenario")) read_scenario(*s, c.scenario);
    if (const json* w = r.child("world")) read_world(*w, c.world);
    if (const json* k = r.child("risk")) read_risk(*k, c.risk);
    if (const json* k = r.child("reward")) read_reward(*k, c.reward);
    if (const json* k = r.child("mask")) read_mask(*k, c.mask);
    if (const json* k = r.child("train")) read_train(*k, c.train);
    if (const json* k = r.child("task_spec")) read_spec(*k, c.task_spec, "task_spec");
    if (const json* k = r.child("safe_spec")) read_spec(*k, c.safe_spec, "safe_spec");
    if (const json* b = r.child("return_bounds")) {
      for (auto it = b->begin(); it != b->end(); ++it) {
        const auto v = it.value().get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("return_bounds." + it.key() + " must be [min, max]");
        c.return_bounds[it.key()] = {v[0], v[1]};
      }
    }
    r.finish();
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return run_config_from_json(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void save_run_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file '" + path + "'");
  out << to_json(config) << '\n';
}

RunConfig apply_overrides(const RunConfig& config, const std::vector<std::string>& assignments) {
  if (assignments.empty()) return config;
  json j = json::parse(to_json(config));
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + a + "' is not key=value");
    const std::string key = a.substr(0, eq);
    const std::string raw = a.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  return run_config_from_json(j.dump());
}

}  // namespace drsrl
