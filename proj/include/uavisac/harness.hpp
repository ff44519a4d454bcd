#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uavisac/cmaes.hpp"
#include "uavisac/config.hpp"
#include "uavisac/env.hpp"
#include "uavisac/sac.hpp"

namespace uavisac {

/// Proposed: movable array, clustering, learned trajectory.
/// S1/S2: movable/fixed array with nearest-UAV association.
/// S3/S4: movable/fixed array on the lawnmower path (clustering kept).
enum class Scheme { kProposed, kS1, kS2, kS3, kS4 };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);
SchemeOptions scheme_options(Scheme s);
std::vector<Scheme> all_schemes();

struct RunOptions {
  SacConfig sac;
  /// Deterministic-policy evaluation episodes; their reset seeds are shared by all schemes.
  int eval_episodes = 3;
  /// Trace/cluster sinks for the first evaluation episode; empty disables.
  std::filesystem::path trace_path;
  std::filesystem::path cluster_path;
  /// Per-epoch training log (epoch, cumulative_reward, critic_loss, policy_loss, entropy_coef).
  std::filesystem::path training_log_path;
  std::filesystem::path checkpoint_path;
};

struct RunRecord {
  std::string scheme;
  std::uint64_t seed = 0;
  std::vector<double> epoch_rewards;
  double mean_sum_rate_bps = 0.0;  ///< per slot, deterministic policy, eval episodes
  double mean_reward = 0.0;        ///< per slot
  double sensing_satisfaction = 0.0;
  int antenna_count = 0;
  int comm_user_count = 0;
  double sensing_threshold_db = 0.0;
  /// UAV positions of the first evaluation episode: entry 0 after reset, entry
  /// t + 1 after slot t.
  std::vector<std::vector<Vec3>> trajectory;
  /// Array offsets used in each slot of the first evaluation episode.
  std::vector<std::vector<std::vector<double>>> offsets;
};

/// Reset seeds of the evaluation episodes.
std::vector<std::uint64_t> eval_seeds(int episodes);

/// Any deterministic controller: observation -> raw action.
using Controller = std::function<std::vector<double>(const IsacEnv&, const std::vector<double>&)>;

/// Runs the controller over the evaluation episodes and fills the metric fields.
void evaluate_controller(IsacEnv& env, const Controller& controller, const RunOptions& options, RunRecord& record);

/// Trains SAC on the scheme's environment, then evaluates the deterministic policy.
RunRecord run_scheme(Scheme scheme, const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& options);

/// Evaluates a trained agent.
RunRecord evaluate_agent(const SacAgent& agent, Scheme scheme, const ScenarioConfig& cfg, std::uint64_t seed,
                         const RunOptions& options);

struct CmaesBaselineOptions {
  CmaesConfig cmaes{0.3, 0, 60};
  /// Re-optimize every this many slots (0: the association interval).
  int reoptimize_interval = 0;
};

/// Gradient-free baseline: the UAVs hover and CMA-ES picks offsets, beams and
/// powers on the frozen slot, re-optimizing periodically with a warm start.
RunRecord run_cmaes_baseline(const ScenarioConfig& cfg, std::uint64_t seed, const RunOptions& options,
                             const CmaesBaselineOptions& baseline = {});

enum class SweepParameter { kAntennaCount, kUserCount, kSensingThreshold };

std::string sweep_parameter_name(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& name);
ScenarioConfig with_parameter(ScenarioConfig cfg, SweepParameter p, double value);

struct SweepRow {
  double value = 0.0;
  RunRecord record;
};

/// Cartesian product values x schemes x seeds, ordered in that nesting.
/// Runs execute on `threads` workers; the result order does not depend on it.
std::vector<SweepRow> sweep(SweepParameter parameter, const std::vector<double>& values,
                            const std::vector<Scheme>& schemes, const std::vector<std::uint64_t>& seeds,
                            const ScenarioConfig& base, const RunOptions& options, int threads = 1);

/// Columns: parameter, value, scheme, seed, mean_sum_rate_bps, mean_reward, sensing_satisfaction, final_cumulative_reward.
void write_sweep_csv(const std::filesystem::path& path, SweepParameter parameter, const std::vector<SweepRow>& rows);
/// Columns: parameter, value, scheme, runs, mean_sum_rate_bps, std_sum_rate_bps, mean_satisfaction.
void write_sweep_summary_csv(const std::filesystem::path& path, SweepParameter parameter,
                             const std::vector<SweepRow>& rows);
/// Columns: epoch, scheme, seed, cumulative_reward.
void write_learning_curves_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);
/// Columns: t, uav_id, x, y, z.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<std::vector<Vec3>>& trajectory);
/// Columns: scheme, seed, antenna_count, comm_user_count, sensing_threshold_db, mean_sum_rate_bps,
/// mean_reward, sensing_satisfaction.
void write_records_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);

struct TrajectoryViolation {
  int t = 0;
  std::string what;
  bool hard = true;  ///< false for separation events, which the reward penalizes instead
};

/// Flight-box, per-slot displacement and separation checks on a trajectory dump.
std::vector<TrajectoryViolation> check_trajectory(const std::vector<std::vector<Vec3>>& trajectory,
                                                  const ScenarioConfig& cfg);

/// Formats a double with 12 significant digits; used for every CSV cell.
std::string format_number(double x);

}  // namespace uavisac
