#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "uavisac/array.hpp"
#include "uavisac/config.hpp"

namespace uavisac {


struct UavState {
  Vec3 position = Vec3::Zero();
  Attitude attitude;
  ArrayGeometry array;
  double array_heading = 0.0;
};

enum class NodeKind { kCommUser, kSensingTarget };

struct GroundNode {
  int id = 0;
  NodeKind kind = NodeKind::kCommUser;
  Vec3 position = Vec3::Zero();  ///< z is always 0
  Vec2 velocity = Vec2::Zero();
  double heading = 0.0;
};

/// Everything that moves. Nodes are ordered comm users first, then targets.
struct WorldState {
  std::vector<UavState> uavs;
  std::vector<GroundNode> nodes;
  int slot = 0;

  int comm_count() const;
  std::span<const GroundNode> comm_users() const;
};

struct Box {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p, double tol = 0.0) const;
  Vec3 clamp(const Vec3& p) const;
};

Box uav_bounds(const ScenarioConfig& cfg);

/// Draws speed ~ U[0, max] and heading ~ U[0, 2 pi) for one node.
void resample_velocity(GroundNode& node, double max_speed, Rng& rng);

/// Advances every node by one slot, reflecting at the area boundary. Velocities
/// are redrawn first on slots that are positive multiples of the resample interval.
void step_user_mobility(std::vector<GroundNode>& nodes, int slot_index, const ScenarioConfig& cfg, Rng& rng);

/// Moves the UAV by speed * direction with the speed clamped to [0, V] and the
/// result clamped into the flight box. `direction` must be a unit vector.
UavState apply_uav_motion(const UavState& uav, double speed, const Vec3& direction, const ScenarioConfig& cfg);

/// Every unordered pair (m, n), m < n, closer than `min_distance`.
std::vector<std::pair<int, int>> check_pairwise_separation(std::span<const UavState> uavs, double min_distance);

/// Roll, pitch and yaw independently uniform in [-max_deg, max_deg].
Attitude sample_attitude(double max_deg, Rng& rng);

}  // namespace uavisac
