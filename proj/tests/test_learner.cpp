#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <functional>

#include "drsrl/diagnostics.hpp"
#include "drsrl/dqn.hpp"
#include "drsrl/errors.hpp"
#include "drsrl/gae.hpp"
#include "drsrl/ppo.hpp"
#include "drsrl/replay.hpp"

namespace drsrl {
namespace {

AgentInput random_input(int width, Rng& rng) {
  AgentInput in{Eigen::VectorXd(width), Eigen::VectorXd(width)};
  for (int i = 0; i < width; ++i) {
    in.self[i] = rng.uniform(-1, 1);
    in.mean[i] = rng.uniform(-1, 1);
  }
  return in;
}

std::vector<double> random_params(const Approximator& net, Rng& rng, double scale = 0.6) {
  std::vector<double> p(net.param_count());
  for (double& v : p) v = rng.uniform(-scale, scale);
  return p;
}

// ---------------------------------------------------------------- replay

Transition with_risk(double r) {
  Transition t;
  t.risk = r;
  return t;
}

TEST(Replay, RiskProportionalProbabilities) {
  ReplayBuffer buf(10, 1.0);
  buf.push(with_risk(1), 1);
  buf.push(with_risk(3), 3);
  const auto p = buf.probabilities();
  EXPECT_EQ(p[0], 0.25);
  EXPECT_EQ(p[1], 0.75);
  EXPECT_EQ(p[0] + p[1], 1.0);
}

TEST(Replay, ChiSquareAgainstPriorities) {
  ReplayBuffer buf(10, 1.0);
  const std::vector<double> pr{0.05, 0.4, 1.0, 0.55};
  for (double r : pr) buf.push(with_risk(r), r);
  Rng rng(21);
  const int n = 100000;
  const auto batch = buf.sample(n, rng);
  std::vector<double> counts(4, 0.0);
  for (auto i : batch.indices) counts[i] += 1;
  const auto p = buf.probabilities();
  double chi2 = 0;
  for (std::size_t k = 0; k < 4; ++k) chi2 += std::pow(counts[k] - n * p[k], 2) / (n * p[k]);
  EXPECT_LT(chi2, 11.345);  // chi-square, 3 degrees of freedom, p = 0.01
}

TEST(Replay, ImportanceWeights) {
  ReplayBuffer buf(10, 1.0, 0.5);
  buf.push(with_risk(1), 1);
  buf.push(with_risk(3), 3);
  Rng rng(22);
  const auto b = buf.sample(64, rng);
  // w = (N p)^-0.5: (0.5)^-0.5 for index 0, (1.5)^-0.5 for index 1, then max-normalized.
  const double w0 = std::pow(0.5, -0.5);
  const double w1 = std::pow(1.5, -0.5);
  bool saw0 = false;
  for (std::size_t k = 0; k < b.indices.size(); ++k) saw0 = saw0 || b.indices[k] == 0;
  ASSERT_TRUE(saw0);
  for (std::size_t k = 0; k < b.indices.size(); ++k) {
    EXPECT_NEAR(b.weights[k], b.indices[k] == 0 ? 1.0 : w1 / w0, 1e-15);
  }
}

TEST(Replay, DegenerateCases) {
  Rng rng(23);
  ReplayBuffer one(4);
  one.push(with_risk(0.3), 0.3);
  const auto b = one.sample(5, rng);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(b.indices[k], 0u);
    EXPECT_EQ(b.weights[k], 1.0);
  }
  ReplayBuffer flat(8);
  for (int i = 0; i < 5; ++i) flat.push(with_risk(0.7), 0.7);
  for (double w : flat.sample(50, rng).weights) EXPECT_EQ(w, 1.0);
  ReplayBuffer zero_kappa(8, 0.0);
  zero_kappa.push(with_risk(0.05), 0.05);
  zero_kappa.push(with_risk(1.0), 1.0);
  EXPECT_EQ(zero_kappa.probabilities(), (std::vector<double>{0.5, 0.5}));
  ReplayBuffer empty(4);
  EXPECT_THROW(empty.sample(1, rng), InvalidStateError);
}

TEST(Replay, PriorityUpdateAndFifo) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 4; ++i) {
    Transition t;
    t.step = static_cast<std::uint32_t>(i);
    buf.push(t, 1.0);
  }
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf[0].step, 1u);
  buf.update_priority(1, 0.05);
  EXPECT_EQ(buf.priority(1), 0.05);
  EXPECT_EQ(buf[1].risk, 0.05);
  EXPECT_THROW(buf.update_priority(3, 0.5), std::out_of_range);
  buf.evict_oldest(2);
  EXPECT_EQ(buf.size(), 1u);
  EXPECT_EQ(buf[0].step, 3u);
}

// ---------------------------------------------------------------- GAE

// Truncated lambda-return built from explicit k-step advantages.
std::vector<double> gae_oracle(const std::vector<double>& r, const std::vector<double>& v,
                               const std::vector<std::uint8_t>& done, double boot, double g, double lam) {
  const std::size_t n = r.size();
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t horizon = n - t;  // steps until the segment ends
    bool terminal = false;
    for (std::size_t j = t; j < n; ++j) {
      if (done[j]) {
        horizon = j - t + 1;
        terminal = true;
        break;
      }
    }
    auto k_step = [&](std::size_t k) {
      double acc = 0;
      for (std::size_t l = 0; l < k; ++l) acc += std::pow(g, static_cast<double>(l)) * r[t + l];
      if (k < horizon) {
        acc += std::pow(g, static_cast<double>(k)) * v[t + k];
      } else if (!terminal) {
        acc += std::pow(g, static_cast<double>(k)) * (t + k < n ? v[t + k] : boot);
      }
      return acc - v[t];
    };
    double a = 0;
    for (std::size_t k = 1; k < horizon; ++k) a += (1 - lam) * std::pow(lam, static_cast<double>(k - 1)) * k_step(k);
    a += std::pow(lam, static_cast<double>(horizon - 1)) * k_step(horizon);
    out[t] = a;
  }
  return out;
}

TEST(Gae, MatchesBruteForceOracle) {
  Rng rng(31);
  for (double lam : {0.0, 0.5, 1.0}) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng.below(10);
      std::vector<double> r(n), v(n);
      std::vector<std::uint8_t> d(n);
      for (std::size_t i = 0; i < n; ++i) {
        r[i] = rng.uniform(-2, 2);
        v[i] = rng.uniform(-2, 2);
        d[i] = rng.uniform() < 0.15 ? 1 : 0;
      }
      const double boot = rng.uniform(-2, 2);
      const double g = rng.uniform(0.5, 0.99);
      const auto res = gae(r, v, d, boot, g, lam);
      const auto want = gae_oracle(r, v, d, boot, g, lam);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(res.advantages[i], want[i], 1e-10);
        EXPECT_NEAR(res.returns[i], want[i] + v[i], 1e-10);
      }
    }
  }
}

TEST(Gae, OneStepAndMonteCarloLimits) {
  const std::vector<double> r{1, 2, 3};
  const std::vector<double> v{0.5, -0.5, 0.25};
  const std::vector<std::uint8_t> d{0, 0, 1};
  const double g = 0.9;
  const auto td = gae(r, v, d, 7.0, g, 0.0);
  EXPECT_DOUBLE_EQ(td.advantages[0], 1 + g * -0.5 - 0.5);
  EXPECT_DOUBLE_EQ(td.advantages[2], 3 - 0.25);  // terminal: no bootstrap
  const auto mc = gae(r, v, d, 7.0, g, 1.0);
  EXPECT_NEAR(mc.advantages[0], 1 + g * 2 + g * g * 3 - 0.5, 1e-12);
  EXPECT_THROW(gae(r, v, std::vector<std::uint8_t>{0}, 0, g, 1.0), DimensionError);
}

// ---------------------------------------------------------------- PPO

struct PpoFixture {
  ApproximatorSpec spec{4, 5, {6}, 0, 4};
  Approximator net{spec};
  std::vector<AgentInput> inputs;
  std::vector<ActionMask> masks;
  std::vector<std::vector<double>> extras;
  std::vector<PpoSample> samples;

  PpoFixture(std::uint64_t seed, int n, int extra = 0) : spec{4, 5, {6}, extra, 4}, net(spec) {
    Rng rng(seed);
    inputs.reserve(static_cast<std::size_t>(n));
    masks.reserve(static_cast<std::size_t>(n));
    extras.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      inputs.push_back(random_input(4, rng));
      ActionMask m(4, 1);
      m[rng.below(4)] = 0;
      masks.push_back(m);
      std::vector<double> e(static_cast<std::size_t>(extra));
      for (double& x : e) x = rng.uniform(-1, 1);
      extras.push_back(e);
    }
    for (int i = 0; i < n; ++i) {
      PpoSample s;
      s.input = &inputs[static_cast<std::size_t>(i)];
      s.mask = &masks[static_cast<std::size_t>(i)];
      if (extra > 0) s.extra = &extras[static_cast<std::size_t>(i)];
      std::size_t a = rng.below(4);
      while (!masks[static_cast<std::size_t>(i)][a]) a = (a + 1) % 4;
      s.action = a;
      s.old_logp = std::log(rng.uniform(0.1, 0.5));
      s.advantage = rng.uniform(-2, 2);
      s.ret = rng.uniform(-1, 1);
      s.weight = rng.uniform(0.2, 1.0);
      s.value_weight = rng.uniform(0.2, 1.0);
      samples.push_back(s);
    }
  }
};

double max_rel_error(const std::vector<double>& g, const std::function<double(const std::vector<double>&)>& f,
                     std::vector<double> p) {
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double keep = p[k];
    p[k] = keep + h;
    const double up = f(p);
    p[k] = keep - h;
    const double down = f(p);
    p[k] = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(g[k] - fd) / std::max({std::abs(g[k]), std::abs(fd), 1e-6}));
  }
  return worst;
}

TEST(Ppo, GradientMatchesFiniteDifferences) {
  for (int extra : {0, 4}) {
    PpoFixture fx(41 + static_cast<std::uint64_t>(extra), 6, extra);
    Rng rng(42);
    const auto params = random_params(fx.net, rng);
    ASSERT_LE(params.size(), 500u);
    const PpoConfig cfg;
    std::vector<double> grad;
    const auto stats = ppo_gradient(fx.net, params, fx.samples, cfg, grad);
    EXPECT_GT(stats.clip_fraction, 0.0);  // both clip branches exercised
    EXPECT_LT(stats.clip_fraction, 1.0);
    const auto loss = [&](const std::vector<double>& p) { return ppo_loss(fx.net, p, fx.samples, cfg).total(); };
    EXPECT_LE(max_rel_error(grad, loss, params), 1e-4) << "extra=" << extra;
  }
}

TEST(Ppo, SingleTransitionPolicyGradientIdentity) {
  PpoFixture fx(43, 1);
  Rng rng(44);
  const auto params = random_params(fx.net, rng);
  PpoConfig cfg;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  auto& s = fx.samples[0];
  const double alpha = 0.3;
  const double w_b = 0.7;
  s.weight = w_b * (1 - alpha);
  const auto logp = [&](const std::vector<double>& p) {
    const auto out = fx.net.forward(p, make_batch(std::span(&fx.inputs[0], 1)));
    const std::vector<double> l(out.logits.data(), out.logits.data() + 4);
    return std::log(masked_softmax(l, fx.masks[0]).probs[s.action]);
  };
  s.old_logp = logp(params);  // ratio 1, clip inactive
  std::vector<double> grad;
  ppo_gradient(fx.net, params, fx.samples, cfg, grad);
  // d loss = -w (1 - alpha) A d log pi(a)
  std::vector<double> scaled(grad.size());
  const double c = -w_b * (1 - alpha) * s.advantage;
  for (std::size_t k = 0; k < grad.size(); ++k) scaled[k] = grad[k] / c;
  EXPECT_LE(max_rel_error(scaled, logp, params), 1e-4);
}

TEST(Ppo, WeightEndpointsZeroTheirModel) {
  Rng rng(45);
  std::deque<Transition> store;
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.input = random_input(22, rng);
    t.mask = ActionMask(23, 1);
    t.task_logits.assign(23, 0.0);
    for (double& l : t.task_logits) l = rng.uniform(-1, 1);
    t.action = rng.below(23);
    t.logp_task = t.logp_safe = std::log(1.0 / 23);
    t.adv_task = rng.uniform(-1, 1);
    t.adv_safe = rng.uniform(-1, 1);
    store.push_back(t);
  }
  std::vector<const Transition*> batch;
  for (const auto& t : store) batch.push_back(&t);
  const std::vector<double> w(batch.size(), 1.0);
  PpoConfig cfg;
  cfg.value_coef = 0.0;
  auto models = PolicyModels::create(rng, 50.0);

  for (auto& t : store) t.alpha = 1.0;
  std::vector<double> grad;
  ppo_gradient(models.task_net, models.task.values, task_samples(batch, w, true), cfg, grad);
  for (double g : grad) ASSERT_EQ(g, 0.0);

  for (auto& t : store) t.alpha = 0.0;
  ppo_gradient(models.safe_net, models.safe.values, safety_samples(batch, w), cfg, grad);
  for (double g : grad) ASSERT_EQ(g, 0.0);
  ppo_gradient(models.task_net, models.task.values, task_samples(batch, w, true), cfg, grad);
  double norm = 0;
  for (double g : grad) norm += g * g;
  EXPECT_GT(norm, 0.0);
}

TEST(Ppo, ReductionIdentityWithCppo) {
  Rng rng(46);
  std::deque<Transition> store;
  for (int i = 0; i < 16; ++i) {
    Transition t;
    t.input = random_input(22, rng);
    t.mask = ActionMask(23, 1);
    t.task_logits.assign(23, 0.1);
    t.action = rng.below(23);
    t.logp_task = std::log(rng.uniform(0.02, 0.1));
    t.logp_safe = t.logp_task;
    t.adv_task = rng.uniform(-1, 1);
    t.ret_task = rng.uniform(-1, 1);
    t.alpha = 0.0;
    store.push_back(t);
  }
  std::vector<const Transition*> batch;
  for (const auto& t : store) batch.push_back(&t);
  const std::vector<double> ones(batch.size(), 1.0);
  Rng init(47);
  auto drs = PolicyModels::create(init, 50.0);
  ParamSet cppo = drs.task;
  const ParamSet safe_before = drs.safe;
  Optimizers opt{Adam(drs.task.values.size(), 3e-4), Adam(drs.safe.values.size(), 1e-4)};
  Adam cppo_opt(cppo.values.size(), 3e-4);
  const PpoConfig cfg;
  for (int step = 0; step < 5; ++step) {
    drs_ppo_update(batch, ones, drs, opt, cfg, true);
    cppo_update(batch, drs.task_net, cppo, cppo_opt, cfg);
    ASSERT_EQ(drs.task.values, cppo.values) << "step " << step;
  }
  EXPECT_EQ(drs.safe.values, safe_before.values);
}

TEST(Ppo, ProjectionAfterEveryStep) {
  Rng rng(48);
  std::deque<Transition> store;
  for (int i = 0; i < 8; ++i) {
    Transition t;
    t.input = random_input(22, rng);
    t.mask = ActionMask(23, 1);
    t.task_logits.assign(23, 0.0);
    t.action = rng.below(23);
    t.logp_task = t.logp_safe = std::log(1.0 / 23);
    t.adv_task = 50 * rng.uniform(-1, 1);
    t.adv_safe = 50 * rng.uniform(-1, 1);
    t.ret_task = t.ret_safe = 100;
    t.alpha = 0.5;
    store.push_back(t);
  }
  std::vector<const Transition*> batch;
  for (const auto& t : store) batch.push_back(&t);
  const std::vector<double> w(batch.size(), 1.0);
  auto models = PolicyModels::create(rng, 5.0);
  Optimizers opt{Adam(models.task.values.size(), 0.05), Adam(models.safe.values.size(), 0.05)};
  for (int step = 0; step < 20; ++step) {
    const auto st = drs_ppo_update(batch, w, models, opt, PpoConfig{});
    EXPECT_LE(st.task_norm, 5.0 * (1 + 1e-12));
    EXPECT_LE(st.safe_norm, 0.27 * 5.0 * (1 + 1e-12));
  }
}

TEST(Ppo, NonFiniteLossAborts) {
  Rng rng(49);
  Transition t;
  t.input = random_input(22, rng);
  t.mask = ActionMask(23, 1);
  t.task_logits.assign(23, 0.0);
  t.adv_task = std::nan("");
  const std::vector<const Transition*> batch{&t};
  const std::vector<double> w{1.0};
  auto models = PolicyModels::create(rng, 50.0);
  Optimizers opt{Adam(models.task.values.size(), 3e-4), Adam(models.safe.values.size(), 1e-4)};
  EXPECT_THROW(drs_ppo_update(batch, w, models, opt, PpoConfig{}), NumericalError);
}

// ---------------------------------------------------------------- DQN

struct DqnToy {
  ApproximatorSpec spec{2, 8, {8}, 0, 2};
  std::deque<Transition> store;
  std::vector<const Transition*> batch;

  // Deterministic 2-state, 2-action chain on one-hot states.
  DqnToy() {
    const AgentInput s0{Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0)};
    const AgentInput s1{Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 1)};
    const AgentInput states[2]{s0, s1};
    const int next[2][2]{{0, 1}, {0, 1}};
    const double reward[2][2]{{0, 1}, {2, 0}};
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        Transition t;
        t.input = states[s];
        t.mask = ActionMask(2, 1);
        t.action = static_cast<std::size_t>(a);
        t.r_task = reward[s][a];
        t.next_input = states[next[s][a]];
        t.next_mask = ActionMask(2, 1);
        store.push_back(t);
      }
    }
    for (const auto& t : store) batch.push_back(&t);
  }
};

TEST(Dqn, TerminalTargetIsReward) {
  DqnToy toy;
  const Approximator net(toy.spec);
  Rng rng(51);
  const auto online = random_params(net, rng);
  const auto target = random_params(net, rng);
  for (auto& t : toy.store) t.done = true;
  for (auto variant : {DqnVariant::Plain, DqnVariant::DoubleDueling}) {
    DqnConfig cfg;
    cfg.variant = variant;
    const auto y = dqn_targets(net, online, target, toy.batch, cfg);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], toy.batch[i]->r_task);
  }
}

TEST(Dqn, ZeroDiscountRegressesOnReward) {
  DqnToy toy;
  const Approximator net(toy.spec);
  Rng rng(52);
  const auto p = random_params(net, rng);
  DqnConfig cfg;
  cfg.gamma = 0.0;
  const auto y = dqn_targets(net, p, p, toy.batch, cfg);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], toy.batch[i]->r_task);
}

TEST(Dqn, TargetsByHand) {
  DqnToy toy;
  const Approximator net(toy.spec);
  Rng rng(53);
  const auto online = random_params(net, rng);
  const auto target = random_params(net, rng);
  DqnConfig plain;
  plain.gamma = 0.9;
  const auto y = dqn_targets(net, online, target, toy.batch, plain);
  const auto tq = q_values(net.forward(target, make_batch(std::vector<AgentInput>{toy.store[1].next_input})),
                           DqnVariant::Plain);
  EXPECT_NEAR(y[1], 1.0 + 0.9 * std::max(tq(0, 0), tq(1, 0)), 1e-15);

  DqnConfig dd = plain;
  dd.variant = DqnVariant::DoubleDueling;
  const auto y2 = dqn_targets(net, online, target, toy.batch, dd);
  const auto nb = make_batch(std::vector<AgentInput>{toy.store[1].next_input});
  const auto oq = q_values(net.forward(online, nb), DqnVariant::DoubleDueling);
  const auto tq2 = q_values(net.forward(target, nb), DqnVariant::DoubleDueling);
  const Eigen::Index pick = oq(0, 0) >= oq(1, 0) ? 0 : 1;
  EXPECT_NEAR(y2[1], 1.0 + 0.9 * tq2(pick, 0), 1e-15);
}

TEST(Dqn, DuelingCombination) {
  NetOutput out;
  out.logits.resize(3, 1);
  out.logits << 1, 2, 6;
  out.value.resize(1);
  out.value << 10;
  const auto q = q_values(out, DqnVariant::DoubleDueling);
  EXPECT_DOUBLE_EQ(q(0, 0), 10 + 1 - 3);
  EXPECT_DOUBLE_EQ(q(2, 0), 10 + 6 - 3);
  EXPECT_EQ(huber(0.5, 1.0), 0.125);
  EXPECT_EQ(huber(-3.0, 1.0), 2.5);
}

TEST(Dqn, GradientMatchesFiniteDifferences) {
  DqnToy toy;
  const Approximator net(toy.spec);
  Rng rng(54);
  const auto p = random_params(net, rng);
  const std::vector<double> y{0.3, 2.5, -1.0, 0.1};  // mixes the quadratic and linear Huber zones
  const std::vector<double> w{1.0, 0.5, 0.8, 0.2};
  for (auto variant : {DqnVariant::Plain, DqnVariant::DoubleDueling}) {
    DqnConfig cfg;
    cfg.variant = variant;
    std::vector<double> grad;
    dqn_gradient(net, p, toy.batch, y, w, cfg, &grad);
    const auto loss = [&](const std::vector<double>& q) { return dqn_gradient(net, q, toy.batch, y, w, cfg, nullptr); };
    EXPECT_LE(max_rel_error(grad, loss, p), 1e-4);
  }
}

TEST(Dqn, ConvergesToValueIterationFixedPoint) {
  const double g = 0.5;
  // Value iteration on the toy chain.
  double q[2][2]{};
  const int next[2][2]{{0, 1}, {0, 1}};
  const double reward[2][2]{{0, 1}, {2, 0}};
  for (int it = 0; it < 200; ++it) {
    double v[2]{std::max(q[0][0], q[0][1]), std::max(q[1][0], q[1][1])};
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) q[s][a] = reward[s][a] + g * v[next[s][a]];
  }
  EXPECT_NEAR(q[0][1], 1 + 0.5 * 10.0 / 3, 1e-12);  // V0 = 8/3, V1 = 10/3

  for (auto variant : {DqnVariant::Plain, DqnVariant::DoubleDueling}) {
    DqnToy toy;
    const Approximator net(toy.spec);
    Rng rng(55);
    DqnConfig cfg;
    cfg.variant = variant;
    cfg.gamma = g;
    cfg.target_sync = 25;
    DqnLearner learner(toy.spec, {net.initialize(rng), 1e3}, 3e-3, cfg);
    const std::vector<double> w(4, 1.0);
    for (int step = 0; step < 20000; ++step) learner.update(toy.batch, w);
    for (int s = 0; s < 2; ++s) {
      const auto qs = learner.q(toy.store[static_cast<std::size_t>(2 * s)].input);
      for (int a = 0; a < 2; ++a) EXPECT_NEAR(qs[static_cast<std::size_t>(a)], q[s][a], 1e-3) << s << a;
    }
    EXPECT_EQ(learner.greedy(toy.store[0].input, ActionMask{1, 1}), 1u);
    EXPECT_EQ(learner.greedy(toy.store[0].input, ActionMask{1, 0}), 0u);
  }
}

// ---------------------------------------------------------------- diagnostics

TEST(Diagnostics, TrivialMaps) {
  DiagnosticsConfig cfg;
  Rng rng(61);
  std::vector<Eigen::VectorXd> states;
  for (int i = 0; i < 5; ++i) states.push_back(Eigen::VectorXd::Random(6));
  const PolicyMap constant = [](const Eigen::VectorXd&) { return std::vector<double>{0.25, 0.75}; };
  EXPECT_EQ(lipschitz_estimate(constant, states, cfg, rng), 0.0);
  EXPECT_EQ(correction_ratio(constant, constant, states, cfg), 0.0);

  Eigen::MatrixXd a(2, 6);
  a << 1, 2, 0, 0, -1, 0, 0, 0.5, 3, 0, 0, 1;
  const PolicyMap linear = [a](const Eigen::VectorXd& s) {
    const Eigen::VectorXd y = a * s;
    return std::vector<double>{y[0], y[1]};
  };
  EXPECT_NEAR(jacobian_norm(linear, states[0], 1e-5), a.norm(), 1e-8);
  const double beta = lipschitz_estimate(linear, states, cfg, rng);
  const double spectral = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()[0];
  EXPECT_GT(beta, 0.0);
  EXPECT_LE(beta, spectral + 1e-9);
  // safe = task + constant offset: gap / ||J|| is the offset norm over ||A||_F.
  const PolicyMap shifted = [&](const Eigen::VectorXd& s) {
    auto y = linear(s);
    y[0] += 0.3;
    y[1] -= 0.4;
    return y;
  };
  EXPECT_NEAR(correction_ratio(linear, shifted, states, cfg), 0.5 / a.norm(), 1e-8);
}

TEST(Diagnostics, DecreaseFraction) {
  const std::vector<double> v{3, 2, 2, 4, 1, 0};
  std::size_t pairs = 0;
  EXPECT_DOUBLE_EQ(decrease_fraction(v, std::vector<std::size_t>(6, 0), &pairs), 4.0 / 5.0);
  EXPECT_EQ(pairs, 5u);
  // Chain break between index 3 and 4 drops the 4 -> 1 pair.
  EXPECT_DOUBLE_EQ(decrease_fraction(v, std::vector<std::size_t>{0, 0, 0, 0, 1, 1}, &pairs), 3.0 / 4.0);
  EXPECT_EQ(pairs, 4u);
  EXPECT_THROW(decrease_fraction(v, std::vector<std::size_t>{0}), DimensionError);
}

TEST(Diagnostics, FlattenRoundTrip) {
  Rng rng(62);
  const auto in = random_input(22, rng);
  const auto flat = flatten_input(in);
  ASSERT_EQ(flat.size(), 44);
  const auto back = unflatten_input(flat);
  EXPECT_EQ(back.self, in.self);
  EXPECT_EQ(back.mean, in.mean);
}

TEST(Diagnostics, ReportOnRandomModels) {
  Rng rng(63);
  const auto models = PolicyModels::create(rng, 50.0);
  std::vector<Transition> ts;
  for (int i = 0; i < 12; ++i) {
    Transition t;
    t.input = random_input(22, rng);
    t.next_input = random_input(22, rng);
    t.mask = t.next_mask = ActionMask(23, 1);
    t.r_safe = rng.uniform(-1, 1);
    t.alpha = i % 3 == 0 ? 0.0 : 0.8;
    t.done = i == 5 || i == 11;
    t.episode = i < 6 ? 0 : 1;
    ts.push_back(t);
  }
  const auto report = theorem_diagnostics(models, ts, DiagnosticsConfig{}, rng);
  EXPECT_EQ(report.states, 12u);
  EXPECT_TRUE(std::isfinite(report.lipschitz_estimate));
  EXPECT_TRUE(std::isfinite(report.correction_ratio));
  EXPECT_EQ(report.max_kl_alpha_zero, 0.0);
  EXPECT_EQ(report.lyapunov.size(), 12u);
  EXPECT_EQ(report.decrease_pairs, 10u);
  EXPECT_GE(report.decrease_fraction, 0.0);
  EXPECT_LE(report.decrease_fraction, 1.0);
  EXPECT_NE(report.to_text().find("decrease_fraction"), std::string::npos);
  EXPECT_THROW(theorem_diagnostics(models, std::span(ts.data(), 1), DiagnosticsConfig{}, rng), InvalidStateError);
}

}  // namespace
}  // namespace drsrl
