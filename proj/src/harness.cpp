#include "uavisac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "uavisac/checkpoint.hpp"

namespace uavisac {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kProposed: return "proposed";
    case Scheme::kS1: return "s1";
    case Scheme::kS2: return "s2";
    case Scheme::kS3: return "s3";
    case Scheme::kS4: return "s4";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : all_schemes())
    if (scheme_name(s) == name) return s;
  throw Error("unknown scheme '" + name + "' (expected proposed, s1, s2, s3 or s4)");
}

std::vector<Scheme> all_schemes() { return {Scheme::kProposed, Scheme::kS1, Scheme::kS2, Scheme::kS3, Scheme::kS4}; }

SchemeOptions scheme_options(Scheme s) {
  SchemeOptions o;
  switch (s) {
    case Scheme::kProposed: break;
    case Scheme::kS1: o.association = AssociationMode::kNearest; break;
    case Scheme::kS2:
      o.association = AssociationMode::kNearest;
      o.array = ArrayMode::kFixed;
      break;
    case Scheme::kS3: o.trajectory = TrajectoryMode::kLawnmower; break;
    case Scheme::kS4:
      o.trajectory = TrajectoryMode::kLawnmower;
      o.array = ArrayMode::kFixed;
      break;
  }
  return o;
}

std::vector<std::uint64_t> eval_seeds(int episodes) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < episodes; ++i) seeds.push_back(1000003ULL + static_cast<std::uint64_t>(i) * 7919ULL);
  return seeds;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void fill_scenario_fields(RunRecord& r, const ScenarioConfig& cfg) {
  r.antenna_count = cfg.antenna_count;
  r.comm_user_count = cfg.comm_user_count;
  r.sensing_threshold_db = cfg.sensing_threshold_db;
}

std::vector<Vec3> uav_positions(const WorldState& w) {
  std::vector<Vec3> out;
  for (const auto& u : w.uavs) out.push_back(u.position);
  return out;
}

}  // namespace

void evaluate_controller(IsacEnv& env, const Controller& controller, const RunOptions& options, RunRecord& record) {
  const auto seeds = eval_seeds(options.eval_episodes);
  if (seeds.empty()) throw Error("evaluation needs at least one episode");
  double rate_sum = 0.0, reward_sum = 0.0;
  long slots = 0, satisfied = 0, sensed = 0;
  record.trajectory.clear();
  record.offsets.clear();
  for (std::size_t e = 0; e < seeds.size(); ++e) {
    std::ofstream trace, clusters;
    if (e == 0 && !options.trace_path.empty()) {
      trace = open_output(options.trace_path);
      env.set_trace(&trace);
    }
    if (e == 0 && !options.cluster_path.empty()) {
      clusters = open_output(options.cluster_path);
      env.set_cluster_dump(&clusters);
    }
    std::vector<double> obs = env.reset(seeds[e]);
    if (e == 0) record.trajectory.push_back(uav_positions(env.world()));
    for (bool done = false; !done;) {
      StepOutcome out = env.step_detailed(controller(env, obs));
      rate_sum += out.reward.sum_rate_bps;
      reward_sum += out.reward.total;
      ++slots;
      for (double g : out.metrics.sensing_sinr) {
        ++sensed;
        if (sensing_feasible(g, env.config().sensing_threshold)) ++satisfied;
      }
      if (e == 0) {
        record.trajectory.push_back(uav_positions(env.world()));
        std::vector<std::vector<double>> offs;
        for (const auto& u : env.world().uavs) offs.push_back(u.array.offsets);
        record.offsets.push_back(std::move(offs));
      }
      obs = std::move(out.observation);
      done = out.done;
    }
    env.set_trace(nullptr);
    env.set_cluster_dump(nullptr);
  }
  record.mean_sum_rate_bps = rate_sum / static_cast<double>(slots);
  record.mean_reward = reward_sum / static_cast<double>(slots);
  record.sensing_satisfaction = sensed > 0 ? static_cast<double>(satisfied) / static_cast<double>(sensed) : 1.0;
}

RunRecord evaluate_agent(const SacAgent& agent, Scheme scheme, const ScenarioConfig& cfg, std::uint64_t seed,
                         const RunOptions& options) {
  IsacEnv env(cfg, scheme_options(scheme));
  if (agent.observation_dim() != env.observation_dim() || agent.action_dim() != env.action_dim())
    throw Error("agent dimensions do not match the scenario");
  RunRecord record;
  record.scheme = scheme_name(scheme);
  record.seed = seed;
  fill_scenario_fields(record, env.config());
  Rng unused(0);
  evaluate_controller(
      env, [&](const IsacEnv&, const std::vector<double>& obs) { return agent.act(obs, unused, true); }, options,
      record);
  return record;
}

RunRecord run_scheme(Scheme scheme, const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& options) {
  IsacEnv env(cfg, scheme_options(scheme));
  SacConfig sac = options.sac;
  sac.seed = seed;

  std::ofstream log;
  if (!options.training_log_path.empty()) {
    log = open_output(options.training_log_path);
    log << "epoch,cumulative_reward,critic_loss,policy_loss,entropy_coef\n";
  }
  TrainResult trained = sac_train(env, sac, [&](const EpochStats& st) {
    if (log.is_open())
      log << st.epoch << ',' << format_number(st.cumulative_reward) << ',' << format_number(st.critic_loss) << ','
          << format_number(st.policy_loss) << ',' << format_number(st.entropy_coef) << '\n';
  });
  if (!options.checkpoint_path.empty())
    save_checkpoint(options.checkpoint_path, trained.agent, config_hash(env.config()), scheme_name(scheme));

  RunRecord record = evaluate_agent(trained.agent, scheme, cfg, seed, options);
  for (const auto& st : trained.curve) record.epoch_rewards.push_back(st.cumulative_reward);
  return record;
}

RunRecord run_cmaes_baseline(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& options,
                             const CmaesBaselineOptions& baseline) {
  IsacEnv env(cfg, scheme_options(Scheme::kProposed));
  const int interval = baseline.reoptimize_interval > 0 ? baseline.reoptimize_interval : env.config().assoc_interval;
  const ActionLayout& layout = env.action_layout();
  auto hover = [&](RVec x) {
    for (int n = 0; n < layout.uav_count; ++n) {
      x[layout.uav_offset(n)] = -1.0;
      for (int i = 1; i <= 3; ++i) x[layout.uav_offset(n) + i] = 0.0;
    }
    return x;
  };
  RVec best = RVec::Zero(layout.size());
  CmaesConfig cmaes = baseline.cmaes;
  cmaes.lower = -1.0;
  cmaes.upper = 1.0;
  std::uint64_t calls = 0;

  RunRecord record;
  record.scheme = "cmaes";
  record.seed = seed;
  fill_scenario_fields(record, env.config());
  evaluate_controller(
      env,
      [&](const IsacEnv& e, const std::vector<double>&) {
        if (e.slot() % interval == 0) {
          cmaes.seed = seed * 1000003ULL + calls++;
          const auto res = cmaes_optimize(
              [&](const RVec& x) {
                const RVec a = hover(x);
                return -e.evaluate_static(std::span<const double>(a.data(), static_cast<std::size_t>(a.size()))).total;
              },
              best, cmaes);
          best = hover(res.best_x);
        }
        return std::vector<double>(best.data(), best.data() + best.size());
      },
      options, record);
  return record;
}

std::string sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kAntennaCount: return "antenna_count";
    case SweepParameter::kUserCount: return "comm_user_count";
    case SweepParameter::kSensingThreshold: return "sensing_threshold_db";
  }
  return "unknown";
}

SweepParameter parse_sweep_parameter(const std::string& name) {
  for (SweepParameter p :
       {SweepParameter::kAntennaCount, SweepParameter::kUserCount, SweepParameter::kSensingThreshold})
    if (sweep_parameter_name(p) == name) return p;
  throw Error("unknown sweep parameter '" + name +
              "' (expected antenna_count, comm_user_count or sensing_threshold_db)");
}

ScenarioConfig with_parameter(ScenarioConfig cfg, SweepParameter p, double value) {
  switch (p) {
    case SweepParameter::kAntennaCount: cfg.antenna_count = static_cast<int>(std::lround(value)); break;
    case SweepParameter::kUserCount: cfg.comm_user_count = static_cast<int>(std::lround(value)); break;
    case SweepParameter::kSensingThreshold: cfg.sensing_threshold_db = value; break;
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepRow> sweep(SweepParameter parameter, const std::vector<double>& values,
                            const std::vector<Scheme>& schemes, const std::vector<std::uint64_t>& seeds,
                            const ScenarioConfig& base, const RunOptions& options, int threads) {
  if (values.empty()) throw Error("sweep: empty value list");
  if (schemes.empty() || seeds.empty()) throw Error("sweep: need at least one scheme and one seed");
  std::vector<SweepRow> rows;
  std::vector<std::pair<ScenarioConfig, Scheme>> jobs;
  for (double v : values) {
    const ScenarioConfig cfg = with_parameter(base, parameter, v);
    for (Scheme s : schemes)
      for (auto seed : seeds) {
        rows.push_back({v, {}});
        rows.back().record.seed = seed;
        jobs.emplace_back(cfg, s);
      }
  }
  RunOptions quiet = options;
  quiet.trace_path.clear();
  quiet.cluster_path.clear();
  quiet.training_log_path.clear();
  quiet.checkpoint_path.clear();

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i].record = run_scheme(jobs[i].second, jobs[i].first, rows[i].record.seed, quiet);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, SweepParameter parameter, const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw Error("write_sweep_csv: no rows");
  auto out = open_output(path);
  out << "parameter,value,scheme,seed,mean_sum_rate_bps,mean_reward,sensing_satisfaction,final_cumulative_reward\n";
  for (const auto& r : rows) {
    const double last = r.record.epoch_rewards.empty() ? 0.0 : r.record.epoch_rewards.back();
    out << sweep_parameter_name(parameter) << ',' << format_number(r.value) << ',' << r.record.scheme << ','
        << r.record.seed << ',' << format_number(r.record.mean_sum_rate_bps) << ','
        << format_number(r.record.mean_reward) << ',' << format_number(r.record.sensing_satisfaction) << ','
        << format_number(last) << '\n';
  }
}

void write_sweep_summary_csv(const std::filesystem::path& path, SweepParameter parameter,
                             const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw Error("write_sweep_summary_csv: no rows");
  auto out = open_output(path);
  out << "parameter,value,scheme,runs,mean_sum_rate_bps,std_sum_rate_bps,mean_satisfaction\n";
  std::vector<std::pair<double, std::string>> keys;
  std::map<std::pair<double, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.value, r.record.scheme);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r.record);
  }
  for (const auto& key : keys) {
    const auto& g = groups.at(key);
    double mean = 0.0, sat = 0.0;
    for (const auto* r : g) {
      mean += r->mean_sum_rate_bps;
      sat += r->sensing_satisfaction;
    }
    mean /= static_cast<double>(g.size());
    sat /= static_cast<double>(g.size());
    double var = 0.0;
    for (const auto* r : g) var += (r->mean_sum_rate_bps - mean) * (r->mean_sum_rate_bps - mean);
    const double sd = g.size() > 1 ? std::sqrt(var / static_cast<double>(g.size() - 1)) : 0.0;
    out << sweep_parameter_name(parameter) << ',' << format_number(key.first) << ',' << key.second << ','
        << g.size() << ',' << format_number(mean) << ',' << format_number(sd) << ',' << format_number(sat) << '\n';
  }
}

void write_learning_curves_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  if (records.empty()) throw Error("write_learning_curves_csv: no records");
  auto out = open_output(path);
  out << "epoch,scheme,seed,cumulative_reward\n";
  for (const auto& r : records)
    for (std::size_t e = 0; e < r.epoch_rewards.size(); ++e)
      out << e << ',' << r.scheme << ',' << r.seed << ',' << format_number(r.epoch_rewards[e]) << '\n';
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<std::vector<Vec3>>& trajectory) {
  if (trajectory.empty()) throw Error("write_trajectory_csv: empty trajectory");
  auto out = open_output(path);
  out << "t,uav_id,x,y,z\n";
  for (std::size_t t = 0; t < trajectory.size(); ++t)
    for (std::size_t n = 0; n < trajectory[t].size(); ++n) {
      const Vec3& p = trajectory[t][n];
      out << t << ',' << n << ',' << format_number(p.x()) << ',' << format_number(p.y()) << ','
          << format_number(p.z()) << '\n';
    }
}

void write_records_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  if (records.empty()) throw Error("write_records_csv: no records");
  auto out = open_output(path);
  out << "scheme,seed,antenna_count,comm_user_count,sensing_threshold_db,mean_sum_rate_bps,mean_reward,"
         "sensing_satisfaction\n";
  for (const auto& r : records)
    out << r.scheme << ',' << r.seed << ',' << r.antenna_count << ',' << r.comm_user_count << ','
        << format_number(r.sensing_threshold_db) << ',' << format_number(r.mean_sum_rate_bps) << ','
        << format_number(r.mean_reward) << ',' << format_number(r.sensing_satisfaction) << '\n';
}

std::vector<TrajectoryViolation> check_trajectory(const std::vector<std::vector<Vec3>>& trajectory,
                                                  const ScenarioConfig& cfg) {
  std::vector<TrajectoryViolation> out;
  const Box box = uav_bounds(cfg);
  constexpr double tol = 1e-6;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const auto& now = trajectory[t];
    const int ti = static_cast<int>(t);
    for (std::size_t n = 0; n < now.size(); ++n) {
      if (!box.contains(now[n], tol)) out.push_back({ti, "uav " + std::to_string(n) + " outside the flight box"});
      if (t > 0 && (now[n] - trajectory[t - 1][n]).norm() > cfg.uav_max_speed + tol)
        out.push_back({ti, "uav " + std::to_string(n) + " moved farther than the speed limit"});
      for (std::size_t m = n + 1; m < now.size(); ++m)
        if ((now[n] - now[m]).norm() < cfg.collision_distance)
          out.push_back(
              {ti, "uavs " + std::to_string(n) + " and " + std::to_string(m) + " closer than the collision distance",
               false});
    }
  }
  return out;
}

}  // namespace uavisac
