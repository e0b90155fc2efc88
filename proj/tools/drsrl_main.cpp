#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drsrl/checkpoint.hpp"
#include "drsrl/config.hpp"
#include "drsrl/diagnostics.hpp"
#include "drsrl/errors.hpp"
#include "drsrl/evaluate.hpp"
#include "drsrl/trainer.hpp"

namespace {

using namespace drsrl;

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string scenario;
  std::string algo;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c, bool with_algo = true) {
  app->add_option("--config", c.config_path, "JSON run configuration; omitted keys keep their defaults")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seeds, "Run seed; repeat for several seeds (default: config seeds)");
  app->add_option("--scenario", c.scenario, "Scenario: LVEB, OPI, RPC or IJ")
      ->check(CLI::IsMember({"LVEB", "OPI", "RPC", "IJ"}));
  if (with_algo) {
    app->add_option("--algo", c.algo, "Algorithm: drs_ppo, cppo, cdqn or cd3qn")
        ->check(CLI::IsMember({"drs_ppo", "cppo", "cdqn", "cd3qn"}));
  }
  app->add_option("--out", c.out, "Output directory (default: config out_dir)");
  app->add_option("--set", c.sets, "Override a config key, e.g. --set train.lr_task=1e-3 (repeatable)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  if (!c.scenario.empty()) set_scenario(cfg, scenario_from_string(c.scenario));
  cfg = apply_overrides(cfg, c.sets);
  if (!c.algo.empty()) cfg.algorithm = algorithm_from_string(c.algo);
  if (!c.seeds.empty()) cfg.seeds = c.seeds;
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

int run_train(const Common& c, int episodes) {
  RunConfig cfg = resolve(c);
  cfg.mode = "train";
  if (episodes >= 0) cfg.episodes = episodes;
  ensure_dir(cfg.out_dir);
  save_run_config(cfg, join(cfg.out_dir, "run_config.json"));
  for (const std::uint64_t seed : cfg.seeds) {
    const auto start = std::chrono::steady_clock::now();
    Trainer trainer(cfg, seed);
    const auto rows = trainer.train(cfg.episodes, cfg.out_dir);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    int collisions = 0;
    for (const auto& r : rows) collisions += r.collisions;
    std::cout << to_string(cfg.algorithm) << " seed " << seed << ": " << rows.size() << " episodes, "
              << trainer.stats().updates << " updates, " << collisions << " collision episodes, " << secs << " s\n"
              << "  log        " << trainer.log_path(cfg.out_dir) << '\n'
              << "  checkpoint " << trainer.checkpoint_path(cfg.out_dir, rows.empty() ? "init" : "") << '\n';
  }
  return 0;
}

int run_eval(const Common& c, const std::string& ckpt_path, int episodes) {
  RunConfig cfg = resolve(c);
  cfg.mode = "eval";
  if (episodes > 0) cfg.eval_episodes = episodes;
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (!c.algo.empty() && ckpt.algorithm != cfg.algorithm) {
    throw ConfigError("checkpoint was trained with " + std::string(to_string(ckpt.algorithm)) + ", not " + c.algo);
  }
  cfg.algorithm = ckpt.algorithm;
  const EvalResult res = evaluate_checkpoint(ckpt, cfg, cfg.eval_episodes, cfg.seeds);
  ensure_dir(cfg.out_dir);
  const std::string stem = std::string(to_string(ckpt.algorithm)) + "_" + std::string(to_string(cfg.scenario.id));
  write_trajectory_csv(join(cfg.out_dir, stem + "_trajectory.csv"), res.trajectory);
  std::ofstream m(join(cfg.out_dir, stem + "_metrics.csv"));
  m << metrics_header() << '\n' << format_metrics(res.metrics) << '\n';
  std::cout << metrics_header() << '\n' << format_metrics(res.metrics) << '\n';
  return 0;
}

int run_diagnose(const Common& c, const std::string& ckpt_path, int episodes) {
  RunConfig cfg = resolve(c);
  cfg.mode = "diagnose";
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (ckpt.algorithm != Algorithm::DrsPpo) throw ConfigError("diagnose needs a drs_ppo checkpoint");
  const auto transitions = collect_transitions(ckpt, cfg, episodes > 0 ? episodes : 2, cfg.seeds.front());
  Rng rng(derive_seed(cfg.seeds.front(), 3));
  const DiagnosticsReport report = theorem_diagnostics(models_from_checkpoint(ckpt), transitions, {}, rng);
  ensure_dir(cfg.out_dir);
  std::ofstream(join(cfg.out_dir, "diagnostics.txt")) << report.to_text();
  std::cout << report.to_text();
  return 0;
}

int run_compare(const Common& c, const std::vector<std::string>& algos, int n_seeds, int episodes, int eval_episodes) {
  RunConfig cfg = resolve(c);
  std::vector<Algorithm> list;
  for (const auto& a : algos) list.push_back(algorithm_from_string(a));
  if (list.empty()) throw ConfigError("compare needs at least one algorithm");
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (n_seeds > 0) {
    seeds.clear();
    for (int s = 0; s < n_seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (episodes >= 0) cfg.episodes = episodes;
  if (eval_episodes > 0) cfg.eval_episodes = eval_episodes;
  ensure_dir(cfg.out_dir);
  std::cout << "algorithm,seed," << metrics_header() << std::endl;
  const CompareResult res =
      compare(cfg, list, seeds, cfg.episodes, cfg.eval_episodes, cfg.out_dir, [](const CompareEntry& e) {
        std::cout << to_string(e.algorithm) << ',' << e.seed << ',' << format_metrics(e.metrics) << std::endl;
      });
  std::ofstream(join(cfg.out_dir, "compare_" + std::string(to_string(cfg.scenario.id)) + ".csv")) << res.table();
  for (const Algorithm a : list) std::cout << "median CR " << to_string(a) << ": " << res.median_cr(a) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-aware residual safe RL for multi-AV driving scenarios"};
  app.require_subcommand(1);

  Common common;
  int episodes = -1;
  std::string checkpoint;

  auto* train = app.add_subcommand("train", "Train one algorithm for every seed");
  add_common(train, common);
  train->add_option("--episodes", episodes, "Training episodes M (default: config episodes)")->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "Evaluation episodes per seed (default: config eval_episodes)")
      ->check(CLI::PositiveNumber);

  auto* diagnose = app.add_subcommand("diagnose", "Stability diagnostics of a drs_ppo checkpoint");
  add_common(diagnose, common, false);
  diagnose->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--episodes", episodes, "Rollout episodes to sample states from (default 2)")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> algos;
  int n_seeds = 0;
  int eval_episodes = 0;
  auto* cmp = app.add_subcommand("compare", "Train and evaluate several algorithms on the same seeds");
  add_common(cmp, common, false);
  cmp->add_option("algorithms", algos, "Algorithms to compare, e.g. drs_ppo cppo")
      ->required()
      ->check(CLI::IsMember({"drs_ppo", "cppo", "cdqn", "cd3qn"}));
  cmp->add_option("--seeds", n_seeds, "Use seeds 0..N-1 instead of --seed/config seeds")->check(CLI::PositiveNumber);
  cmp->add_option("--episodes", episodes, "Training episodes per run")->check(CLI::NonNegativeNumber);
  cmp->add_option("--eval-episodes", eval_episodes, "Evaluation episodes per run")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(common, episodes);
    if (*eval) return run_eval(common, checkpoint, episodes);
    if (*diagnose) return run_diagnose(common, checkpoint, episodes);
    if (*cmp) return run_compare(common, algos, n_seeds, episodes, eval_episodes);
  } catch (const drsrl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
