// Command-line front end: train, evaluate, sweep, replay, dump-config.
#include <cstdio>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "uavisac/checkpoint.hpp"
#include "uavisac/harness.hpp"

namespace fs = std::filesystem;
using namespace uavisac;

namespace {

struct Common {
  std::string config;
  std::string scheme = "proposed";
  std::uint64_t seed = 1;
  int epochs = 150;
  std::string out_dir = "out";
  bool paper_scale = false;
  bool dump_clusters = false;
  int eval_episodes = 3;
  int updates_per_epoch = -1;
  int batch_size = 256;
  int random_steps = 0;
  double learning_rate = 1e-4;
  double reward_scale = 1.0;
  double entropy_coef = 1e-3;
  std::string hidden = "256,256";
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Scenario file (key = value lines)");
  app->add_option("--scheme", c.scheme, "proposed | s1 | s2 | s3 | s4 (evaluate also accepts cmaes)");
  app->add_option("--seed", c.seed, "Run seed");
  app->add_option("--epochs", c.epochs, "Training epochs (one episode each)");
  app->add_option("--out-dir", c.out_dir, "Output directory");
  app->add_flag("--paper-scale", c.paper_scale, "1200 training epochs");
  app->add_flag("--dump-clusters", c.dump_clusters, "Write clusters.jsonl for the first evaluation episode");
  app->add_option("--eval-episodes", c.eval_episodes, "Deterministic evaluation episodes");
  app->add_option("--updates-per-epoch", c.updates_per_epoch, "SAC updates per epoch (-1: one per step)");
  app->add_option("--batch-size", c.batch_size, "SAC batch size");
  app->add_option("--random-steps", c.random_steps, "Uniform random actions before the policy takes over");
  app->add_option("--lr", c.learning_rate, "Learning rate of every optimizer");
  app->add_option("--reward-scale", c.reward_scale, "Reward multiplier seen by the learner");
  app->add_option("--entropy-coef", c.entropy_coef, "Initial entropy coefficient");
  app->add_option("--hidden", c.hidden, "Hidden layer widths, comma separated");
  app->allow_extras();
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Unrecognized arguments must be `--key=value` scenario overrides.
ScenarioConfig scenario_from(const Common& c, const std::vector<std::string>& extras) {
  ScenarioConfig cfg = c.config.empty() ? table1_config() : load_config(c.config);
  for (const auto& arg : extras) {
    const auto eq = arg.find('=');
    if (arg.rfind("--", 0) != 0 || eq == std::string::npos)
      throw Error("unrecognized argument '" + arg + "' (scenario overrides take the form --key=value)");
    apply_override(cfg, arg.substr(2, eq - 2), arg.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

RunOptions run_options(const Common& c) {
  RunOptions o;
  o.sac.epochs = c.paper_scale ? 1200 : c.epochs;
  o.sac.updates_per_epoch = c.updates_per_epoch;
  o.sac.batch_size = c.batch_size;
  o.sac.random_steps = c.random_steps;
  o.sac.learning_rate = c.learning_rate;
  o.sac.reward_scale = c.reward_scale;
  o.sac.initial_entropy_coef = c.entropy_coef;
  o.sac.hidden.clear();
  for (const auto& h : split(c.hidden)) o.sac.hidden.push_back(std::stoi(h));
  o.sac.seed = c.seed;
  o.eval_episodes = c.eval_episodes;
  const fs::path dir(c.out_dir);
  o.trace_path = dir / "trace.jsonl";
  if (c.dump_clusters) o.cluster_path = dir / "clusters.jsonl";
  return o;
}

void report(const RunRecord& r) {
  std::printf("scheme=%s seed=%llu mean_sum_rate_bps=%s mean_reward=%s sensing_satisfaction=%s\n", r.scheme.c_str(),
              static_cast<unsigned long long>(r.seed), format_number(r.mean_sum_rate_bps).c_str(),
              format_number(r.mean_reward).c_str(), format_number(r.sensing_satisfaction).c_str());
}

int cmd_train(const Common& c, const std::vector<std::string>& extras) {
  const ScenarioConfig cfg = scenario_from(c, extras);
  RunOptions o = run_options(c);
  const fs::path dir(c.out_dir);
  o.training_log_path = dir / "training_log.csv";
  o.checkpoint_path = dir / "checkpoint.json";
  const RunRecord r = run_scheme(parse_scheme(c.scheme), cfg, c.seed, o);
  write_learning_curves_csv(dir / "learning_curve.csv", {r});
  write_trajectory_csv(dir / "trajectory.csv", r.trajectory);
  write_records_csv(dir / "run.csv", {r});
  report(r);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& checkpoint, const std::vector<std::string>& extras) {
  const ScenarioConfig cfg = scenario_from(c, extras);
  const RunOptions o = run_options(c);
  const fs::path dir(c.out_dir);
  RunRecord r;
  if (c.scheme == "cmaes") {
    r = run_cmaes_baseline(cfg, c.seed, o);
  } else {
    const fs::path path = checkpoint.empty() ? dir / "checkpoint.json" : fs::path(checkpoint);
    const Checkpoint cp = load_checkpoint(path);
    if (cp.config_hash != config_hash(cfg))
      throw Error("checkpoint " + path.string() + " was trained on a different scenario config");
    r = evaluate_agent(cp.agent, parse_scheme(cp.scheme), cfg, c.seed, o);
  }
  write_trajectory_csv(dir / "trajectory.csv", r.trajectory);
  write_records_csv(dir / "eval.csv", {r});
  report(r);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& values, const std::string& schemes,
              const std::string& seeds, int threads, const std::vector<std::string>& extras) {
  const ScenarioConfig cfg = scenario_from(c, extras);
  RunOptions o = run_options(c);
  std::vector<double> vals;
  for (const auto& v : split(values)) vals.push_back(std::stod(v));
  std::vector<Scheme> sch;
  for (const auto& s : split(schemes)) sch.push_back(parse_scheme(s));
  std::vector<std::uint64_t> sd;
  for (const auto& s : split(seeds)) sd.push_back(std::stoull(s));
  const SweepParameter p = parse_sweep_parameter(param);
  const auto rows = sweep(p, vals, sch, sd, cfg, o, threads);
  const fs::path dir(c.out_dir);
  write_sweep_csv(dir / "sweep.csv", p, rows);
  write_sweep_summary_csv(dir / "sweep_summary.csv", p, rows);
  std::vector<RunRecord> records;
  for (const auto& r : rows) records.push_back(r.record);
  write_learning_curves_csv(dir / "learning_curve.csv", records);
  for (const auto& r : rows) {
    std::printf("%s=%s ", sweep_parameter_name(p).c_str(), format_number(r.value).c_str());
    report(r.record);
  }
  return 0;
}

int cmd_replay(const Common& c, const std::string& trace_path, const std::vector<std::string>& extras) {
  const ScenarioConfig cfg = scenario_from(c, extras);
  const fs::path dir(c.out_dir);
  const fs::path path = trace_path.empty() ? dir / "trace.jsonl" : fs::path(trace_path);
  std::ifstream in(path);
  if (!in) throw Error("cannot read trace " + path.string());
  std::vector<std::vector<Vec3>> traj;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    std::vector<Vec3> slot;
    for (const auto& p : j.at("uav_positions")) slot.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    traj.push_back(std::move(slot));
  }
  if (traj.empty()) throw Error("trace " + path.string() + " is empty");
  write_trajectory_csv(dir / "replay_trajectory.csv", traj);
  int hard = 0;
  for (const auto& v : check_trajectory(traj, cfg)) {
    std::printf("slot %d: %s%s\n", v.t, v.what.c_str(), v.hard ? "" : " (penalized)");
    if (v.hard) ++hard;
  }
  std::printf("replayed %zu slots, %d constraint violations\n", traj.size(), hard);
  return hard == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Keep the network temporaries on the heap instead of fresh mmap pages.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Multi-UAV ISAC simulator with movable antenna arrays"};
  app.require_subcommand(1);
  Common common;

  auto* train = app.add_subcommand("train", "Train SAC for one scheme and evaluate it");
  add_common(train, common);

  std::string checkpoint;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint, or run the CMA-ES baseline");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file (default <out-dir>/checkpoint.json)");

  std::string param = "antenna_count", values, schemes = "proposed", seeds = "1";
  int threads = 1;
  auto* sw = app.add_subcommand("sweep", "Train and evaluate over a parameter grid");
  add_common(sw, common);
  sw->add_option("--param", param, "antenna_count | comm_user_count | sensing_threshold_db");
  sw->add_option("--values", values, "Comma-separated values")->required();
  sw->add_option("--schemes", schemes, "Comma-separated schemes");
  sw->add_option("--seeds", seeds, "Comma-separated seeds");
  sw->add_option("--threads", threads, "Worker threads");

  std::string trace;
  auto* replay = app.add_subcommand("replay", "Re-check a trace against the flight constraints");
  add_common(replay, common);
  replay->add_option("--trace", trace, "Trace file (default <out-dir>/trace.jsonl)");

  auto* dump = app.add_subcommand("dump-config", "Print the effective scenario config");
  add_common(dump, common);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(common, train->remaining());
    if (*evaluate) return cmd_evaluate(common, checkpoint, evaluate->remaining());
    if (*sw) return cmd_sweep(common, param, values, schemes, seeds, threads, sw->remaining());
    if (*replay) return cmd_replay(common, trace, replay->remaining());
    if (*dump) {
      std::cout << dump_config(scenario_from(common, dump->remaining()));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
