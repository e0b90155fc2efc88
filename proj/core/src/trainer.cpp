#include "drsrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "drsrl/errors.hpp"
#include "drsrl/gae.hpp"

namespace drsrl {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void normalize(std::vector<double*>& xs) {
  if (xs.size() < 2) return;
  double mean = 0.0;
  for (double* x : xs) mean += *x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double* x : xs) var += (*x - mean) * (*x - mean);
  const double sd = std::sqrt(var / static_cast<double>(xs.size()));
  for (double* x : xs) *x = (*x - mean) / (sd + 1e-8);
}

}  // namespace

std::string episode_log_header() {
  return "episode,seed,return_task,return_safe,normalized_return,collisions,mean_risk,alpha_high_fraction,steps,outcome";
}

std::string format_episode_row(const EpisodeLogRow& r) {
  return std::to_string(r.episode) + ',' + std::to_string(r.seed) + ',' + fmt(r.return_task) + ',' +
         fmt(r.return_safe) + ',' + fmt(r.normalized_return) + ',' + std::to_string(r.collisions) + ',' +
         fmt(r.mean_risk) + ',' + fmt(r.alpha_high_fraction) + ',' + std::to_string(r.steps) + ',' + r.outcome;
}

void write_episode_log(const std::string& path, const std::vector<EpisodeLogRow>& rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write episode log '" + path + "'");
  out << episode_log_header() << '\n';
  for (const auto& r : rows) out << format_episode_row(r) << '\n';
}

struct Trainer::Rollout {
  EpisodeLogRow row;
  std::vector<std::vector<Transition>> chains;  // per AV, in step order
};

Trainer::Trainer(RunConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      seed_(seed),
      actions_(config_.world.a_max, config_.world.delta_max_deg),
      rng_(derive_seed(seed, 2)) {
  config_.validate();
  if (config_.task_spec.node_width != static_cast<int>(kVehicleFeatureDim) ||
      config_.task_spec.n_actions != static_cast<int>(kActionCount)) {
    throw ConfigError("task_spec must take 22-wide nodes and produce 23 actions");
  }
  Rng init(derive_seed(seed_, 1));
  const TrainConfig& t = config_.train;
  if (is_ppo(config_.algorithm)) {
    models_ = std::make_unique<PolicyModels>(
        PolicyModels::create(init, t.norm_cap, config_.task_spec, config_.safe_spec));
    opt_ = std::make_unique<Optimizers>(Optimizers{Adam(models_->task.values.size(), t.lr_task, t.max_grad_norm),
                                                   Adam(models_->safe.values.size(), t.lr_safe, t.max_grad_norm)});
    const auto capacity = static_cast<std::size_t>(t.replay_episodes) *
                          static_cast<std::size_t>(config_.scenario.horizon) *
                          static_cast<std::size_t>(config_.scenario.n_avs);
    buffer_ = std::make_unique<ReplayBuffer>(capacity, t.kappa, t.is_exponent);
  } else {
    Approximator net(config_.task_spec);
    ParamSet online{net.initialize(init), t.norm_cap};
    project_in_place(online);
    DqnConfig dc;
    dc.variant = config_.algorithm == Algorithm::Cd3qn ? DqnVariant::DoubleDueling : DqnVariant::Plain;
    dc.gamma = t.gamma;
    dc.target_sync = t.dqn_target_sync;
    dc.reward_scale = t.reward_scale;
    dqn_ = std::make_unique<DqnLearner>(config_.task_spec, std::move(online), t.dqn_lr, dc);
    dqn_buffer_ = std::make_unique<ReplayBuffer>(static_cast<std::size_t>(t.dqn_buffer), 0.0, 0.0);
  }
}

Trainer::~Trainer() = default;

const PolicyModels& Trainer::models() const {
  if (!models_) throw InvalidStateError("models() is only available for PPO algorithms");
  return *models_;
}

std::vector<Transition> Trainer::recent_transitions() const {
  std::vector<Transition> out;
  if (!buffer_) return out;
  out.reserve(buffer_->size());
  for (std::size_t i = 0; i < buffer_->size(); ++i) out.push_back((*buffer_)[i]);
  return out;
}

double Trainer::exploration_epsilon() const {
  const TrainConfig& t = config_.train;
  const double span = std::max(1.0, t.dqn_eps_decay * static_cast<double>(planned_episodes_));
  const double frac = std::min(1.0, static_cast<double>(episode_) / span);
  return t.dqn_eps_start + (t.dqn_eps_end - t.dqn_eps_start) * frac;
}

Trainer::Rollout Trainer::rollout() {
  Rollout out;
  const TrainConfig& t = config_.train;
  const bool ppo = is_ppo(config_.algorithm);
  const bool drs = config_.algorithm == Algorithm::DrsPpo;
  World world = make_world(config_, training_episode_seed(seed_, episode_));
  const std::size_t n = world.av_count();
  out.chains.resize(n);

  Observation obs = observe(world, config_, actions_);
  std::vector<ControlInput> controls(n);
  std::vector<std::optional<Transition>> pending(n);
  const double epsilon = ppo ? 0.0 : exploration_epsilon();
  double risk_sum = 0.0;
  int high = 0;
  int steps = 0;
  double ret_task = 0.0;
  double ret_safe = 0.0;
  EpisodeStatus status;

  while (true) {
    double alpha = 0.0;
    if (drs) alpha = t.alpha_override >= 0.0 ? t.alpha_override : safety_weight(obs.risk, config_.risk);
    for (std::size_t i = 0; i < n; ++i) {
      controls[i] = ControlInput{};
      pending[i].reset();
      if (!obs.active[i]) continue;
      Transition tr;
      tr.input = obs.inputs[i];
      tr.mask = obs.masks[i];
      tr.risk = obs.risk;
      tr.alpha = alpha;
      tr.episode = static_cast<std::uint32_t>(episode_);
      tr.agent = static_cast<std::uint32_t>(i);
      tr.step = static_cast<std::uint32_t>(steps);
      if (ppo) {
        PolicyEval ev = evaluate_policies(*models_, tr.input, tr.mask, drs);
        const ActionDistribution behaviour = drs ? hybrid(ev.task, ev.safe, alpha) : ev.task;
        const SampledAction s = sample_action(behaviour, rng_);
        tr.action = s.index;
        tr.logp_task = std::log(ev.task.probs[s.index]);
        tr.logp_safe = drs ? std::log(ev.safe.probs[s.index]) : 0.0;
        tr.value_task = ev.task_value;
        tr.value_safe = ev.safe_value;
        tr.task_logits = std::move(ev.task_logits);
      } else if (rng_.uniform() < epsilon) {
        std::vector<std::size_t> feasible;
        for (std::size_t k = 0; k < tr.mask.size(); ++k) {
          if (tr.mask[k]) feasible.push_back(k);
        }
        tr.action = feasible[rng_.below(feasible.size())];
      } else {
        tr.action = dqn_->greedy(tr.input, tr.mask);
      }
      controls[i] = actions_.control(tr.action);
      pending[i] = std::move(tr);
    }

    const StepResult res = advance(world, controls, config_);
    ++steps;
    risk_sum += obs.risk;
    high += obs.high_risk ? 1 : 0;
    Observation next = observe(world, config_, actions_);
    const bool terminal = res.status.done() && res.status.outcome != EpisodeStatus::Outcome::Timeout;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pending[i]) continue;
      Transition& tr = *pending[i];
      tr.r_task = res.rewards[i].r_task;
      tr.r_safe = res.rewards[i].r_safe;
      tr.next_input = next.inputs[i];
      tr.next_mask = next.masks[i];
      tr.done = terminal || !next.active[i];
      ret_task += tr.r_task;
      ret_safe += tr.r_safe;
      if (ppo) {
        out.chains[i].push_back(std::move(tr));
      } else {
        dqn_buffer_->push(std::move(tr), 1.0);
        dqn_learn(env_steps_);
      }
    }
    obs = std::move(next);
    if (res.status.done()) {
      status = res.status;
      break;
    }
  }

  EpisodeLogRow& row = out.row;
  row.episode = episode_;
  row.seed = seed_;
  row.return_task = ret_task / static_cast<double>(n);
  row.return_safe = ret_safe / static_cast<double>(n);
  row.normalized_return = normalized_return(row.return_task, config_.bounds());
  row.collisions = status.av_collision(world.participants()) ? 1 : 0;
  row.mean_risk = risk_sum / steps;
  row.alpha_high_fraction = static_cast<double>(high) / steps;
  row.steps = steps;
  row.outcome = std::string(to_string(status.outcome));
  return out;
}

void Trainer::dqn_learn(std::uint64_t& env_steps) {
  const TrainConfig& t = config_.train;
  ++env_steps;
  if (env_steps % static_cast<std::uint64_t>(t.dqn_update_every) != 0) return;
  if (dqn_buffer_->size() < static_cast<std::size_t>(t.dqn_batch)) return;
  const auto batch = dqn_buffer_->sample(static_cast<std::size_t>(t.dqn_batch), rng_);
  std::vector<const Transition*> ptrs;
  ptrs.reserve(batch.indices.size());
  for (std::size_t i : batch.indices) ptrs.push_back(&(*dqn_buffer_)[i]);
  const std::vector<double> ones(ptrs.size(), 1.0);
  dqn_->update(ptrs, ones);
  ++stats_.updates;
  check_norms();
  if (on_update) on_update(*this);
}

void Trainer::refresh_advantages() {
  const TrainConfig& t = config_.train;
  const bool drs = config_.algorithm == Algorithm::DrsPpo;
  const std::size_t n = buffer_->size();
  std::vector<AgentInput> inputs;
  std::vector<std::vector<double>> logits;
  inputs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    inputs.push_back((*buffer_)[i].input);
    if (drs) logits.push_back((*buffer_)[i].task_logits);
  }
  const NetOutput task_out = models_->task_net.forward(models_->task.values, make_batch(inputs));
  Eigen::RowVectorXd safe_values;
  if (drs) safe_values = models_->safe_net.forward(models_->safe.values, make_batch(inputs, logits)).value;

  std::vector<double*> adv_task;
  std::vector<double*> adv_safe;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    const Transition& head = (*buffer_)[i];
    while (j < n && (*buffer_)[j].episode == head.episode && (*buffer_)[j].agent == head.agent) ++j;
    const std::size_t len = j - i;
    std::vector<double> r_task(len), r_safe(len), v_task(len), v_safe(len, 0.0);
    std::vector<std::uint8_t> dones(len);
    for (std::size_t k = 0; k < len; ++k) {
      const Transition& tr = (*buffer_)[i + k];
      r_task[k] = t.reward_scale * tr.r_task;
      r_safe[k] = t.reward_scale * tr.r_safe;
      dones[k] = tr.done ? 1 : 0;
      v_task[k] = task_out.value[static_cast<Eigen::Index>(i + k)];
      if (drs) v_safe[k] = safe_values[static_cast<Eigen::Index>(i + k)];
    }
    double boot_task = 0.0;
    double boot_safe = 0.0;
    const Transition& last = (*buffer_)[j - 1];
    if (!last.done) {
      std::vector<double> next_logits;
      const ActionMask open(kActionCount, 1);
      task_policy(models_->task_net, models_->task, last.next_input, open, &next_logits, &boot_task);
      if (drs) safe_policy(models_->safe_net, models_->safe, last.next_input, next_logits, open, nullptr, &boot_safe);
    }
    const GaeResult gt = gae(r_task, v_task, dones, boot_task, t.gamma, t.gae_lambda);
    const GaeResult gs = gae(r_safe, v_safe, dones, boot_safe, t.gamma, t.gae_lambda);
    for (std::size_t k = 0; k < len; ++k) {
      Transition& tr = buffer_->at(i + k);
      tr.adv_task = gt.advantages[k];
      tr.ret_task = gt.returns[k];
      tr.adv_safe = gs.advantages[k];
      tr.ret_safe = gs.returns[k];
      adv_task.push_back(&tr.adv_task);
      adv_safe.push_back(&tr.adv_safe);
    }
    i = j;
  }
  if (t.normalize_advantages) {
    normalize(adv_task);
    normalize(adv_safe);
  }
}

void Trainer::ppo_update(std::size_t new_transitions) {
  const TrainConfig& t = config_.train;
  const bool drs = config_.algorithm == Algorithm::DrsPpo;
  refresh_advantages();
  PpoConfig pc;
  pc.clip_eps = t.clip_eps;
  pc.value_coef = t.value_coef;
  pc.entropy_coef = t.entropy_coef;
  const auto batch_size = static_cast<std::size_t>(t.batch_size);
  const std::size_t per_epoch = (new_transitions + batch_size - 1) / batch_size;
  const std::size_t minibatches = static_cast<std::size_t>(t.epochs) * per_epoch;
  const std::size_t draw = std::min(batch_size, buffer_->size());
  std::vector<const Transition*> ptrs;
  for (std::size_t m = 0; m < minibatches; ++m) {
    const auto batch = buffer_->sample(draw, rng_);
    ptrs.clear();
    for (std::size_t i : batch.indices) ptrs.push_back(&(*buffer_)[i]);
    if (drs) {
      drs_ppo_update(ptrs, batch.weights, *models_, *opt_, pc, t.freeze_safety);
    } else {
      cppo_update(ptrs, models_->task_net, models_->task, opt_->task, pc);
    }
    ++stats_.updates;
    check_norms();
    if (on_update) on_update(*this);
  }
}

void Trainer::check_norms() {
  const double slack = 1.0 + 1e-12;
  if (models_) {
    const double tn = models_->task.norm();
    const double sn = models_->safe.norm();
    if (tn > models_->task.norm_cap * slack || sn > models_->safe.norm_cap * slack) {
      throw InvalidStateError("parameter norm above its cap after an update (task " + std::to_string(tn) + ", safety " +
                              std::to_string(sn) + ")");
    }
    stats_.max_task_norm = std::max(stats_.max_task_norm, tn);
    stats_.max_safe_norm = std::max(stats_.max_safe_norm, sn);
  } else {
    const double tn = dqn_->online().norm();
    if (tn > dqn_->online().norm_cap * slack) {
      throw InvalidStateError("parameter norm above its cap after an update (" + std::to_string(tn) + ")");
    }
    stats_.max_task_norm = std::max(stats_.max_task_norm, tn);
  }
}

EpisodeLogRow Trainer::run_episode() {
  planned_episodes_ = std::max(planned_episodes_, episode_ + 1);
  Rollout r = rollout();
  if (models_) {
    // Make room first; a full buffer would otherwise drop rows on push and
    // the per-episode bookkeeping would evict too much.
    while (episode_sizes_.size() >= static_cast<std::size_t>(config_.train.replay_episodes)) {
      buffer_->evict_oldest(episode_sizes_.front());
      episode_sizes_.pop_front();
    }
    std::size_t added = 0;
    const bool risk_priority = config_.algorithm == Algorithm::DrsPpo && !config_.train.uniform_replay;
    for (auto& chain : r.chains) {
      for (auto& tr : chain) {
        const double p = risk_priority ? tr.risk : 1.0;
        buffer_->push(std::move(tr), p);
        ++added;
      }
    }
    episode_sizes_.push_back(added);
    stats_.transitions += added;
    if (added > 0) ppo_update(added);
  }
  ++episode_;
  return r.row;
}

std::string Trainer::log_path(const std::string& out_dir) const {
  return (std::filesystem::path(out_dir) /
          (std::string(to_string(config_.algorithm)) + "_episodes_seed" + std::to_string(seed_) + ".csv"))
      .string();
}

std::string Trainer::checkpoint_path(const std::string& out_dir, const std::string& tag) const {
  return (std::filesystem::path(out_dir) / (std::string(to_string(config_.algorithm)) + "_seed" +
                                            std::to_string(seed_) + (tag.empty() ? "" : "_" + tag) + ".ckpt"))
      .string();
}

std::vector<EpisodeLogRow> Trainer::train(int episodes, const std::string& out_dir) {
  if (episodes < 0) throw ConfigError("episode count must be >= 0");
  planned_episodes_ = episode_ + episodes;
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());
    save_checkpoint(checkpoint(), checkpoint_path(out_dir, "init"));
  }
  std::vector<EpisodeLogRow> rows;
  rows.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    rows.push_back(run_episode());
    const int every = config_.train.checkpoint_every;
    if (!out_dir.empty() && every > 0 && episode_ % every == 0 && e + 1 < episodes) {
      save_checkpoint(checkpoint(), checkpoint_path(out_dir, "ep" + std::to_string(episode_)));
    }
  }
  if (!out_dir.empty()) {
    write_episode_log(log_path(out_dir), rows);
    if (episodes > 0) save_checkpoint(checkpoint(), checkpoint_path(out_dir, ""));
  }
  return rows;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.algorithm = config_.algorithm;
  c.actions = actions_;
  c.task_spec = config_.task_spec;
  c.episodes_trained = episode_;
  if (models_) {
    c.task = models_->task;
    if (config_.algorithm == Algorithm::DrsPpo) {
      c.safe_spec = config_.safe_spec;
      c.safe = models_->safe;
    }
  } else {
    c.task = dqn_->online();
  }
  return c;
}

}  // namespace drsrl
