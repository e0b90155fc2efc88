#include "drsrl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drsrl/errors.hpp"

namespace drsrl {

namespace {

double l2_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("diagnostics: policy outputs differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

Eigen::VectorXd flatten_input(const AgentInput& input) {
  Eigen::VectorXd s(input.self.size() + input.mean.size());
  s << input.self, input.mean;
  return s;
}

AgentInput unflatten_input(const Eigen::VectorXd& s) {
  if (s.size() % 2 != 0) throw DimensionError("unflatten_input: odd state width");
  const auto w = s.size() / 2;
  return {s.head(w), s.tail(w)};
}

double lipschitz_estimate(const PolicyMap& policy, std::span<const Eigen::VectorXd> states, const DiagnosticsConfig& config,
                          Rng& rng) {
  double best = 0.0;
  for (const auto& s : states) {
    const auto p = policy(s);
    for (int k = 0; k < config.pairs_per_state; ++k) {
      Eigen::VectorXd d(s.size());
      for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = rng.uniform(-1.0, 1.0);
      const double n = d.norm();
      if (n == 0.0) continue;
      d *= config.perturbation / n;
      best = std::max(best, l2_distance(policy(s + d), p) / d.norm());
    }
  }
  return best;
}

double jacobian_norm(const PolicyMap& policy, const Eigen::VectorXd& s, double step) {
  double sq = 0.0;
  Eigen::VectorXd probe = s;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    probe[i] = s[i] + step;
    const auto up = policy(probe);
    probe[i] = s[i] - step;
    const auto down = policy(probe);
    probe[i] = s[i];
    for (std::size_t k = 0; k < up.size(); ++k) {
      const double g = (up[k] - down[k]) / (2.0 * step);
      sq += g * g;
    }
  }
  return std::sqrt(sq);
}

double correction_ratio(const PolicyMap& task, const PolicyMap& safe, std::span<const Eigen::VectorXd> states,
                        const DiagnosticsConfig& config) {
  double best = 0.0;
  for (const auto& s : states) {
    const double gap = l2_distance(safe(s), task(s));
    if (gap == 0.0) continue;
    best = std::max(best, gap / std::max(config.eps, jacobian_norm(task, s, config.fd_step)));
  }
  return best;
}

double decrease_fraction(std::span<const double> v, std::span<const std::size_t> chain, std::size_t* pairs) {
  if (v.size() != chain.size()) throw DimensionError("decrease_fraction: series and chain ids differ in length");
  std::size_t total = 0;
  std::size_t down = 0;
  for (std::size_t t = 1; t < v.size(); ++t) {
    if (chain[t] != chain[t - 1]) continue;
    ++total;
    if (v[t] <= v[t - 1]) ++down;
  }
  if (pairs) *pairs = total;
  return total == 0 ? 0.0 : static_cast<double>(down) / static_cast<double>(total);
}

DiagnosticsReport theorem_diagnostics(const PolicyModels& models, std::span<const Transition> transitions,
                                      const DiagnosticsConfig& config, Rng& rng) {
  if (transitions.size() < 2) throw InvalidStateError("theorem_diagnostics needs at least two states");
  DiagnosticsReport report;
  report.states = transitions.size();

  std::vector<Eigen::VectorXd> states;
  states.reserve(transitions.size());
  for (const auto& t : transitions) states.push_back(flatten_input(t.input));

  // The maps see every action as feasible so that perturbations cannot
  // switch the support.
  const ActionMask open(static_cast<std::size_t>(models.task_net.spec().n_actions), 1);
  const PolicyMap task = [&](const Eigen::VectorXd& s) {
    return task_policy(models.task_net, models.task, unflatten_input(s), open).probs;
  };
  const PolicyMap safe = [&](const Eigen::VectorXd& s) {
    const AgentInput in = unflatten_input(s);
    std::vector<double> logits;
    task_policy(models.task_net, models.task, in, open, &logits);
    return safe_policy(models.safe_net, models.safe, in, logits, open).probs;
  };
  report.lipschitz_estimate = lipschitz_estimate(task, states, config, rng);
  report.correction_ratio = correction_ratio(task, safe, states, config);

  std::vector<std::size_t> chain;
  chain.reserve(transitions.size());
  for (const auto& t : transitions) {
    const PolicyEval now = evaluate_policies(models, t.input, t.mask);
    const ActionDistribution mixed = hybrid(now.task, now.safe, t.alpha);
    report.max_kl_alpha_zero =
        std::max(report.max_kl_alpha_zero, kl_divergence(hybrid(now.task, now.safe, 0.0), now.task));
    double next_value = 0.0;
    if (!t.done) {
      std::vector<double> next_logits;
      task_policy(models.task_net, models.task, t.next_input, t.next_mask, &next_logits);
      safe_policy(models.safe_net, models.safe, t.next_input, next_logits, t.next_mask, nullptr, &next_value);
    }
    const double q_safe = t.r_safe + config.gamma * next_value;
    report.lyapunov.push_back(q_safe + config.lambda_kl * kl_divergence(mixed, now.task));
    chain.push_back((static_cast<std::size_t>(t.episode) << 16) ^ t.agent);
  }
  report.decrease_fraction = decrease_fraction(report.lyapunov, chain, &report.decrease_pairs);

  for (double v : report.lyapunov) {
    if (!std::isfinite(v)) throw NumericalError("theorem_diagnostics: non-finite V estimate");
  }
  if (!std::isfinite(report.lipschitz_estimate) || !std::isfinite(report.correction_ratio)) {
    throw NumericalError("theorem_diagnostics: non-finite Lipschitz or correction estimate");
  }
  return report;
}

std::string DiagnosticsReport::to_text() const {
  std::ostringstream os;
  os.precision(10);
  os << "states " << states << '\n'
     << "lipschitz_estimate " << lipschitz_estimate << '\n'
     << "correction_ratio " << correction_ratio << '\n'
     << "max_kl_alpha_zero " << max_kl_alpha_zero << '\n'
     << "decrease_fraction " << decrease_fraction << '\n'
     << "decrease_pairs " << decrease_pairs << '\n';
  double lo = lyapunov.empty() ? 0.0 : lyapunov.front();
  double hi = lo;
  for (double v : lyapunov) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  os << "lyapunov_min " << lo << '\n' << "lyapunov_max " << hi << '\n';
  return os.str();
}

}  // namespace drsrl
