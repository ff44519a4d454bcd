#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "uavisac/association.hpp"
#include "uavisac/channel.hpp"
#include "uavisac/config.hpp"
#include "uavisac/rl_env.hpp"
#include "uavisac/scenario.hpp"
#include "uavisac/sensing.hpp"

namespace uavisac {

enum class ArrayMode { kMovable, kFixed };
enum class AssociationMode { kClustering, kNearest };
enum class TrajectoryMode { kLearned, kLawnmower };

/// Per-scheme freezes applied on top of the shared physics.
struct SchemeOptions {
  ArrayMode array = ArrayMode::kMovable;
  AssociationMode association = AssociationMode::kClustering;
  TrajectoryMode trajectory = TrajectoryMode::kLearned;
};

/// Observation layout, in order:
///   per UAV n, per slot s < xi: Re/Im of h(n, user in slot s), 2M values
///   per UAV n, per slot s: 1 if the slot holds a user, else 0
///   per target: Re/Im of the channel from its transmitting UAV, 2M values
///   per target: bistatic gain of its current sensing link
///   per UAV: position (3)
///   per node (comm users then targets): ground position (2)
///   per UAV: current array offsets (M)
///   per UAV: centroid of its assigned cluster (2), zero when it has none
/// Every entry is affinely mapped into [-1, 1].
struct ObservationLayout {
  int uav_count = 0;
  int slots = 0;
  int antennas = 0;
  int comm_users = 0;
  int targets = 0;

  explicit ObservationLayout(const ScenarioConfig& cfg);
  int size() const;
};

/// Action layout, in order:
///   per UAV: speed (1), direction (3), offsets (M), then per slot s < xi a beam
///            (M real parts, M imaginary parts) followed by a power ratio (1)
///   per target: sensing beam (2M) and power ratio (1) of its transmitting UAV
struct ActionLayout {
  int uav_count = 0;
  int slots = 0;
  int antennas = 0;
  int targets = 0;

  explicit ActionLayout(const ScenarioConfig& cfg);
  int per_uav() const { return 4 + antennas + slots * (2 * antennas + 1); }
  int per_target() const { return 2 * antennas + 1; }
  int uav_offset(int n) const { return n * per_uav(); }
  int slot_offset(int n, int s) const { return uav_offset(n) + 4 + antennas + s * (2 * antennas + 1); }
  int target_offset(int k) const { return uav_count * per_uav() + k * per_target(); }
  int size() const { return uav_count * per_uav() + targets * per_target(); }
};

struct DecodedAction {
  std::vector<double> commanded_speed;  ///< before clamping to V
  std::vector<double> speed;
  std::vector<Vec3> direction;  ///< unit vectors
  std::vector<ArrayGeometry> geometry;
  BeamPlan beams;
};

/// Maps raw entries in [-1, 1] to a feasible decision. Comm slot s of UAV n
/// drives the s-th served comm user (ascending index); unused slots and
/// non-associated pairs keep rho = 0. Out-of-range raws are clipped.
DecodedAction decode_action(std::span<const double> raw, const AssociationMatrix& assoc, const WorldState& world,
                            const ScenarioConfig& cfg, ArrayMode array_mode);

struct RewardBreakdown {
  double sum_rate_bps = 0.0;   ///< raw sum rate, logged only
  double sum_rate_term = 0.0;  ///< sum_k log2(1 + gamma_k)
  double sensing_penalty = 0.0;
  double collision_penalty = 0.0;
  double speed_penalty = 0.0;
  double total = 0.0;
};

/// Everything evaluated in one slot.
struct SlotMetrics {
  std::vector<double> comm_sinr;
  std::vector<double> rates_bps;
  std::vector<double> sensing_sinr;  ///< per target
  std::vector<int> sensing_rx;       ///< per target
  std::vector<std::pair<int, int>> collisions;
  int speed_violations = 0;
};

/// Assembles the reward; penalties are non-negative and total is the rate term minus all of them.
RewardBreakdown compute_reward(const SlotMetrics& metrics, const ScenarioConfig& cfg);

/// Comm SINRs/rates and sensing SINRs of a world snapshot under a decision.
SlotMetrics evaluate_slot(const WorldState& world, const BeamPlan& beams, const AssociationState& assoc,
                          std::span<const double> clutter_draws, const ScenarioConfig& cfg);

/// Waypoint follower for the fixed-trajectory schemes: UAV n sweeps the
/// vertical strip [n w / N, (n + 1) w / N] along two lanes at a quarter and three
/// quarters of the strip width, at mid altitude.
class LawnmowerPath {
 public:
  LawnmowerPath() = default;
  LawnmowerPath(const ScenarioConfig& cfg, int uav);
  const Vec3& start() const { return waypoints_.front(); }
  /// Speed and unit direction that move `position` toward the next waypoint.
  std::pair<double, Vec3> command(const Vec3& position);

 private:
  std::vector<Vec3> waypoints_;
  std::size_t next_ = 1;
  double speed_ = 0.0;
};

struct StepOutcome {
  std::vector<double> observation;
  RewardBreakdown reward;
  SlotMetrics metrics;
  bool done = false;
};

/// Multi-UAV ISAC episode. One instance is single-threaded.
///
/// step() executes slot t with the association the observation was built from:
/// decode, move UAVs, resample attitudes, move users, evaluate, reward. The
/// association for slot t + 1 (reclustering on multiples of assoc_interval, or
/// nearest-UAV every slot) is then computed and encoded in the next observation.
class IsacEnv : public Environment {
 public:
  IsacEnv(ScenarioConfig cfg, SchemeOptions scheme = {});

  int observation_dim() const override { return obs_layout_.size(); }
  int action_dim() const override { return act_layout_.size(); }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;

  /// Full step with the reward breakdown and slot metrics.
  StepOutcome step_detailed(std::span<const double> action);
  /// Reward of applying `action` to the current slot without advancing.
  RewardBreakdown evaluate_static(std::span<const double> action) const;

  std::vector<double> observe() const;
  const WorldState& world() const { return world_; }
  const AssociationState& association() const { return assoc_; }
  const ScenarioConfig& config() const { return cfg_; }
  const SchemeOptions& scheme() const { return scheme_; }
  const ObservationLayout& observation_layout() const { return obs_layout_; }
  const ActionLayout& action_layout() const { return act_layout_; }
  const std::vector<double>& clutter_draws() const { return clutter_draws_; }
  int slot() const { return world_.slot; }
  bool done() const { return done_; }

  /// JSON-lines sinks; nullptr disables. The trace gets one line per step, the
  /// cluster dump one line per recluster event.
  void set_trace(std::ostream* trace) { trace_ = trace; }
  void set_cluster_dump(std::ostream* dump) { cluster_dump_ = dump; }

 private:
  struct Executed {
    WorldState world;
    DecodedAction decoded;
    SlotMetrics metrics;
    RewardBreakdown reward;
  };
  // Null RNGs freeze users and attitudes (static evaluation).
  Executed execute(std::span<const double> action, std::vector<LawnmowerPath>& paths, Rng* user_rng,
                   Rng* attitude_rng) const;
  void refresh_association();
  void write_trace(const Executed& ex) const;
  void write_clusters() const;

  ScenarioConfig cfg_;
  SchemeOptions scheme_;
  ObservationLayout obs_layout_;
  ActionLayout act_layout_;
  WorldState world_;
  AssociationState assoc_;
  std::vector<double> clutter_draws_;
  std::vector<LawnmowerPath> paths_;
  Rng user_rng_;
  Rng attitude_rng_;
  bool done_ = true;  // until reset()
  std::ostream* trace_ = nullptr;
  std::ostream* cluster_dump_ = nullptr;
};

}  // namespace uavisac
