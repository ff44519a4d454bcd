#include "uavisac/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace uavisac {

int WorldState::comm_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(),
                                        [](const GroundNode& n) { return n.kind == NodeKind::kCommUser; }));
}

std::span<const GroundNode> WorldState::comm_users() const {
  return std::span<const GroundNode>(nodes.data(), static_cast<std::size_t>(comm_count()));
}

bool Box::contains(const Vec3& p, double tol) const {
  for (int i = 0; i < 3; ++i)
    if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
  return true;
}

Vec3 Box::clamp(const Vec3& p) const { return p.cwiseMax(lo).cwiseMin(hi); }

Box uav_bounds(const ScenarioConfig& cfg) {
  return {Vec3(0.0, 0.0, cfg.z_min), Vec3(cfg.area_side, cfg.area_side, cfg.z_max)};
}

void resample_velocity(GroundNode& node, double max_speed, Rng& rng) {
  std::uniform_real_distribution<double> speed_dist(0.0, max_speed);
  std::uniform_real_distribution<double> heading_dist(0.0, 2.0 * kPi);
  const double speed = speed_dist(rng);
  node.heading = heading_dist(rng);
  node.velocity = speed * Vec2(std::cos(node.heading), std::sin(node.heading));
}

namespace {

// Reflects one coordinate into [0, side]; returns true if the velocity flips.
bool reflect(double& x, double side) {
  bool flipped = false;
  while (x < 0.0 || x > side) {
    if (x < 0.0) x = -x;
    else x = 2.0 * side - x;
    flipped = !flipped;
  }
  return flipped;
}

}  // namespace

void step_user_mobility(std::vector<GroundNode>& nodes, int slot_index, const ScenarioConfig& cfg, Rng& rng) {
  const bool resample = slot_index > 0 && slot_index % cfg.mobility_resample_interval == 0;
  for (auto& node : nodes) {
    if (resample) resample_velocity(node, cfg.user_max_speed, rng);
    double x = node.position.x() + node.velocity.x();
    double y = node.position.y() + node.velocity.y();
    if (reflect(x, cfg.area_side)) node.velocity.x() = -node.velocity.x();
    if (reflect(y, cfg.area_side)) node.velocity.y() = -node.velocity.y();
    node.position = Vec3(x, y, 0.0);
    if (node.velocity.squaredNorm() > 0.0) {
      node.heading = std::atan2(node.velocity.y(), node.velocity.x());
      if (node.heading < 0.0) node.heading += 2.0 * kPi;
    }
  }
}

UavState apply_uav_motion(const UavState& uav, double speed, const Vec3& direction, const ScenarioConfig& cfg) {
  if (!direction.allFinite() || std::abs(direction.norm() - 1.0) > 1e-6)
    throw Error("apply_uav_motion: direction must be a unit vector");
  const double s = std::clamp(std::isfinite(speed) ? speed : 0.0, 0.0, cfg.uav_max_speed);
  UavState out = uav;
  out.position = uav_bounds(cfg).clamp(uav.position + s * direction);
  return out;
}

std::vector<std::pair<int, int>> check_pairwise_separation(std::span<const UavState> uavs, double min_distance) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t m = 0; m < uavs.size(); ++m)
    for (std::size_t n = m + 1; n < uavs.size(); ++n)
      if ((uavs[m].position - uavs[n].position).norm() < min_distance)
        pairs.emplace_back(static_cast<int>(m), static_cast<int>(n));
  return pairs;
}

Attitude sample_attitude(double max_deg, Rng& rng) {
  const double bound = max_deg * kPi / 180.0;
  if (bound <= 0.0) return {};
  std::uniform_real_distribution<double> dist(-bound, bound);
  Attitude a;
  a.roll = dist(rng);
  a.pitch = dist(rng);
  a.yaw = dist(rng);
  return a;
}

}  // namespace uavisac
