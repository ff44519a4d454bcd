#include "uavisac/sensing.hpp"

#include <cmath>
#include <limits>
#include <tuple>

namespace uavisac {

double bistatic_gain(double kappa, double rcs, double d_tx, double d_rx) {
  return std::sqrt(kappa * kappa * rcs / (d_tx * d_tx * d_rx * d_rx));
}

SensingLink make_sensing_link(const LinkTable& links, int tx, int rx, int target, double kappa, double rcs) {
  if (tx == rx) throw Error("sensing link: transmitter and receiver must differ");
  SensingLink link;
  link.tx = tx;
  link.rx = rx;
  link.target = target;
  link.gain = bistatic_gain(kappa, rcs, links.channel(tx, target).distance, links.channel(rx, target).distance);
  link.a_tx = links.steering(tx, target);
  link.a_rx = links.steering(rx, target);
  return link;
}

namespace {
double ground_distance(const Vec3& a, const Vec3& b) { return (a.head<2>() - b.head<2>()).norm(); }
}  // namespace

std::vector<int> clutter_members(const Vec3& tx, const Vec3& rx, const Vec3& target,
                                 std::span<const GroundNode> comm_users, double slack) {
  const double bound = (ground_distance(tx, target) + ground_distance(rx, target)) * (1.0 + slack);
  std::vector<int> members;
  for (const auto& u : comm_users) {
    if (u.kind != NodeKind::kCommUser) continue;
    if (ground_distance(u.position, tx) + ground_distance(u.position, rx) <= bound) members.push_back(u.id);
  }
  return members;
}

ClutterSet clutter_set(const SensingLink& link, const WorldState& world, const LinkTable& links,
                       std::span<const double> draws, double scale, double slack) {
  const auto& tx = world.uavs.at(static_cast<std::size_t>(link.tx)).position;
  const auto& rx = world.uavs.at(static_cast<std::size_t>(link.rx)).position;
  const auto& target = world.nodes.at(static_cast<std::size_t>(link.target)).position;
  ClutterSet set;
  for (int user : clutter_members(tx, rx, target, world.comm_users(), slack)) {
    if (user == link.target) continue;
    set.members.push_back({user, draws[static_cast<std::size_t>(user)] * scale * link.gain,
                           links.steering(link.tx, user), links.steering(link.rx, user)});
  }
  return set;
}

CVec receive_beamformer(const CVec& a_rx) { return a_rx / a_rx.norm(); }

double sensing_sinr(const SensingLink& link, const CVec& w, const ClutterSet& clutter, double noise_power) {
  const CVec u = receive_beamformer(link.a_rx);
  const double signal = std::norm(link.gain * u.dot(link.a_rx) * link.a_tx.dot(w));
  double clutter_power = 0.0;
  for (const auto& c : clutter.members) clutter_power += std::norm(c.coefficient * u.dot(c.a_rx) * c.a_tx.dot(w));
  return signal / (clutter_power + noise_power);
}

bool sensing_feasible(double sinr, double threshold) { return sinr >= threshold; }

int select_receiver(int target, const AssociationMatrix& assoc, const ClusterAssignment& assignment,
                    const WorldState& world) {
  const int uav_count = static_cast<int>(world.uavs.size());
  if (uav_count < 2) throw Error("select_receiver: bistatic sensing needs at least 2 UAVs");
  const int tx = assoc.serving_uav(target);
  const Vec3& p = world.nodes.at(static_cast<std::size_t>(target)).position;
  auto distance = [&](int n) { return (world.uavs[static_cast<std::size_t>(n)].position - p).norm(); };
  auto cluster_size = [&](int n) {
    const int c = assignment.uav_cluster.empty() ? -1 : assignment.uav_cluster[static_cast<std::size_t>(n)];
    return c < 0 ? 0 : assignment.cluster_sizes[static_cast<std::size_t>(c)];
  };

  const int tx_cluster = assignment.uav_cluster.empty() ? -1 : assignment.uav_cluster[static_cast<std::size_t>(tx)];
  const bool shared = tx_cluster >= 0 && assignment.owners(tx_cluster) >= 2;

  int best = -1;
  std::tuple<int, double> best_key{std::numeric_limits<int>::max(), std::numeric_limits<double>::infinity()};
  for (int n = 0; n < uav_count; ++n) {
    if (n == tx) continue;
    const std::tuple<int, double> key{shared ? 0 : cluster_size(n), distance(n)};
    if (best < 0 || key < best_key) {
      best = n;
      best_key = key;
    }
  }
  return best;
}

}  // namespace uavisac
