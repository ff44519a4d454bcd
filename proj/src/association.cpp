#include <algorithm>
#include <functional>
#include <limits>

#include "uavisac/association.hpp"

namespace uavisac {

AssociationMatrix::AssociationMatrix(int uav_count, int node_count) : alpha_(Eigen::MatrixXi::Zero(uav_count, node_count)) {}

void AssociationMatrix::assign(int node, int uav) {
  alpha_.col(node).setZero();
  alpha_(uav, node) = 1;
}

int AssociationMatrix::serving_uav(int node) const {
  if (node < 0 || node >= node_count()) throw Error("association: node index out of range");
  int found = -1;
  for (int n = 0; n < uav_count(); ++n) {
    if (alpha_(n, node) == 0) continue;
    if (found >= 0) throw Error("association: node " + std::to_string(node) + " has several serving UAVs");
    found = n;
  }
  if (found < 0) throw Error("association: node " + std::to_string(node) + " has no serving UAV");
  return found;
}

std::vector<int> AssociationMatrix::served_nodes(int uav, int limit) const {
  std::vector<int> out;
  const int end = limit < 0 ? node_count() : std::min(limit, node_count());
  for (int k = 0; k < end; ++k)
    if (alpha_(uav, k) != 0) out.push_back(k);
  return out;
}

bool AssociationMatrix::each_node_served_once() const {
  for (int k = 0; k < node_count(); ++k)
    if (alpha_.col(k).sum() != 1) return false;
  return true;
}

int ClusterAssignment::owners(int cluster) const {
  return static_cast<int>(std::count(uav_cluster.begin(), uav_cluster.end(), cluster));
}

std::vector<Vec2> comm_ground_points(const WorldState& world) {
  std::vector<Vec2> pts;
  for (const auto& u : world.comm_users()) pts.push_back(u.position.head<2>());
  return pts;
}

std::vector<int> uav_loads(const AssociationMatrix& assoc, int comm_count) {
  std::vector<int> loads(static_cast<std::size_t>(assoc.uav_count()), 0);
  for (int n = 0; n < assoc.uav_count(); ++n) loads[static_cast<std::size_t>(n)] = static_cast<int>(assoc.served_nodes(n, comm_count).size());
  return loads;
}

ClusterAssignment assign_clusters(std::span<const UavState> uavs, const ClusterResult& clusters) {
  const int n_uav = static_cast<int>(uavs.size());
  const int n_cl = clusters.cluster_count();
  ClusterAssignment out;
  out.uav_cluster.assign(static_cast<std::size_t>(n_uav), -1);
  for (const auto& c : clusters.clusters) out.cluster_sizes.push_back(static_cast<int>(c.size()));
  if (n_cl == 0) return out;

  Eigen::MatrixXd cost(n_uav, n_cl);
  for (int n = 0; n < n_uav; ++n)
    for (int u = 0; u < n_cl; ++u) {
      const Vec2& mu = clusters.centroids[static_cast<std::size_t>(u)];
      cost(n, u) = (uavs[static_cast<std::size_t>(n)].position - Vec3(mu.x(), mu.y(), 0.0)).norm();
    }
  if (n_cl >= n_uav) {
    out.uav_cluster = hungarian_assign(cost);
  } else {
    for (int n = 0; n < n_uav; ++n) {
      Eigen::Index best = 0;
      cost.row(n).minCoeff(&best);
      out.uav_cluster[static_cast<std::size_t>(n)] = static_cast<int>(best);
    }
  }
  return out;
}

namespace {

using DistanceFn = std::function<double(int uav, int node)>;

int nearest_uav(int node, int uav_count, const DistanceFn& dist, const std::vector<int>* loads = nullptr,
                int max_load = 0) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int n = 0; n < uav_count; ++n) {
    if (loads && (*loads)[static_cast<std::size_t>(n)] >= max_load) continue;
    const double d = dist(n, node);
    if (d < best_d) {
      best = n;
      best_d = d;
    }
  }
  return best;
}

// Evicts farthest members of overloaded UAVs, then places `pending` (plus the
// evicted) one by one on the nearest UAV with spare capacity.
void settle_comm_users(AssociationMatrix& alpha, std::vector<int> pending, int comm_count, int max_load,
                       const DistanceFn& dist) {
  const int n_uav = alpha.uav_count();
  if (comm_count > n_uav * max_load) throw Error("association: comm users exceed uav_count * max_uav_load");
  for (int n = 0; n < n_uav; ++n) {
    auto members = alpha.served_nodes(n, comm_count);
    if (static_cast<int>(members.size()) <= max_load) continue;
    std::stable_sort(members.begin(), members.end(), [&](int a, int b) { return dist(n, a) > dist(n, b); });
    for (std::size_t i = 0; i < members.size() - static_cast<std::size_t>(max_load); ++i) {
      alpha.set(n, members[i], false);
      pending.push_back(members[i]);
    }
  }
  std::sort(pending.begin(), pending.end());
  auto loads = uav_loads(alpha, comm_count);
  for (int k : pending) {
    const int n = nearest_uav(k, n_uav, dist, &loads, max_load);
    if (n < 0) throw Error("association: no UAV with spare capacity");
    alpha.assign(k, n);
    ++loads[static_cast<std::size_t>(n)];
  }
}

}  // namespace

AssociationMatrix update_association(const WorldState& world, const ClusterResult& clusters,
                                     const ClusterAssignment& assignment, int max_load) {
  const int n_uav = static_cast<int>(world.uavs.size());
  const int n_node = static_cast<int>(world.nodes.size());
  const int comm = world.comm_count();
  AssociationMatrix alpha(n_uav, n_node);
  const DistanceFn ground = [&](int n, int k) {
    return (world.uavs[static_cast<std::size_t>(n)].position.head<2>() -
            world.nodes[static_cast<std::size_t>(k)].position.head<2>())
        .norm();
  };

  std::vector<int> pending;
  for (int k = 0; k < comm; ++k) {
    const int label = k < static_cast<int>(clusters.labels.size()) ? clusters.labels[static_cast<std::size_t>(k)]
                                                                     : ClusterResult::kNoise;
    int owner = -1;
    if (label != ClusterResult::kNoise) {
      double best = std::numeric_limits<double>::infinity();
      for (int n = 0; n < n_uav; ++n) {
        if (assignment.uav_cluster[static_cast<std::size_t>(n)] != label) continue;
        if (ground(n, k) < best) {
          best = ground(n, k);
          owner = n;
        }
      }
    }
    if (owner >= 0) alpha.assign(k, owner);
    else pending.push_back(k);
  }
  settle_comm_users(alpha, pending, comm, max_load, ground);

  for (int k = comm; k < n_node; ++k) {
    const Vec2 p = world.nodes[static_cast<std::size_t>(k)].position.head<2>();
    int owner = -1;
    double best_centroid = std::numeric_limits<double>::infinity();
    double best_uav = std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_uav; ++n) {
      const int c = assignment.uav_cluster.empty() ? -1 : assignment.uav_cluster[static_cast<std::size_t>(n)];
      if (c < 0) continue;
      const double dc = (clusters.centroids[static_cast<std::size_t>(c)] - p).norm();
      const double du = ground(n, k);
      if (dc < best_centroid || (dc == best_centroid && du < best_uav)) {
        owner = n;
        best_centroid = dc;
        best_uav = du;
      }
    }
    if (owner < 0) owner = nearest_uav(k, n_uav, ground);
    alpha.assign(k, owner);
  }
  return alpha;
}

AssociationMatrix nearest_association(const WorldState& world, int max_load) {
  const int n_uav = static_cast<int>(world.uavs.size());
  const int n_node = static_cast<int>(world.nodes.size());
  const int comm = world.comm_count();
  AssociationMatrix alpha(n_uav, n_node);
  const DistanceFn dist3 = [&](int n, int k) {
    return (world.uavs[static_cast<std::size_t>(n)].position - world.nodes[static_cast<std::size_t>(k)].position).norm();
  };
  for (int k = 0; k < n_node; ++k) alpha.assign(k, nearest_uav(k, n_uav, dist3));
  settle_comm_users(alpha, {}, comm, max_load, dist3);
  return alpha;
}

AssociationState maybe_recluster(int slot, int interval, const AssociationState& prior, const WorldState& world,
                                 const HdbscanParams& params, int max_load) {
  if (slot % interval != 0) {
    AssociationState same = prior;
    same.reclustered = false;
    return same;
  }
  AssociationState next;
  const auto points = comm_ground_points(world);
  if (!points.empty()) next.clusters = hdbscan_cluster(points, params);
  next.assignment = assign_clusters(world.uavs, next.clusters);
  next.alpha = update_association(world, next.clusters, next.assignment, max_load);
  next.reclustered = true;
  return next;
}

}  // namespace uavisac
