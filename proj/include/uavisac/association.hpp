#pragma once

#include <optional>
#include <vector>

#include "uavisac/hdbscan.hpp"
#include "uavisac/scenario.hpp"

namespace uavisac {

/// Binary UAV-by-node association. Nodes are indexed as in WorldState::nodes.
class AssociationMatrix {
 public:
  AssociationMatrix() = default;
  AssociationMatrix(int uav_count, int node_count);

  int uav_count() const { return static_cast<int>(alpha_.rows()); }
  int node_count() const { return static_cast<int>(alpha_.cols()); }

  bool operator()(int uav, int node) const { return alpha_(uav, node) != 0; }
  void set(int uav, int node, bool on) { alpha_(uav, node) = on ? 1 : 0; }
  /// Clears the node's column and associates it to `uav`.
  void assign(int node, int uav);

  /// The unique serving UAV; throws when the node has zero or several.
  int serving_uav(int node) const;
  /// Nodes served by `uav`, ascending, optionally restricted to indices < limit.
  std::vector<int> served_nodes(int uav, int limit = -1) const;
  /// Every node has exactly one serving UAV.
  bool each_node_served_once() const;

  const Eigen::MatrixXi& matrix() const { return alpha_; }
  bool operator==(const AssociationMatrix& o) const { return alpha_ == o.alpha_; }

 private:
  Eigen::MatrixXi alpha_;
};

/// Which cluster each UAV owns after the assignment step (-1 for none).
struct ClusterAssignment {
  std::vector<int> uav_cluster;
  std::vector<int> cluster_sizes;

  /// Number of UAVs owning `cluster`.
  int owners(int cluster) const;
};

/// Exact minimum-cost assignment of rows to distinct columns (rows <= cols).
/// Returns the column per row. Ties resolve towards lower indices.
std::vector<int> hungarian_assign(const Eigen::MatrixXd& cost);

/// Algorithm-1 cluster step: Hungarian on UAV-to-centroid distances when there
/// are at least as many clusters as UAVs, nearest centroid otherwise.
ClusterAssignment assign_clusters(std::span<const UavState> uavs, const ClusterResult& clusters);

/// Builds the association from the cluster assignment. Clustered comm users go
/// to their cluster's UAV (nearest of the owners when shared). Noise, users of
/// unowned clusters and overflow beyond `max_load` (farthest evicted first) go to
/// the nearest UAV with spare capacity by ground distance. Targets go to the UAV
/// whose centroid is nearest, or the nearest UAV, and do not count toward the load.
AssociationMatrix update_association(const WorldState& world, const ClusterResult& clusters,
                                     const ClusterAssignment& assignment, int max_load);

/// Clustering-free baseline: nearest UAV by 3-D distance with the same load cap.
AssociationMatrix nearest_association(const WorldState& world, int max_load);

/// Load per UAV counted over comm users only.
std::vector<int> uav_loads(const AssociationMatrix& assoc, int comm_count);

/// Association state carried between slots.
struct AssociationState {
  AssociationMatrix alpha;
  ClusterResult clusters;
  ClusterAssignment assignment;
  bool reclustered = false;  ///< set when the last maybe_recluster call ran the pipeline
};

/// Runs cluster -> assign -> associate on slots divisible by `interval` and
/// returns the prior state untouched otherwise.
AssociationState maybe_recluster(int slot, int interval, const AssociationState& prior, const WorldState& world,
                                 const HdbscanParams& params, int max_load);

/// Ground (x, y) of the comm users, the points that get clustered.
std::vector<Vec2> comm_ground_points(const WorldState& world);

}  // namespace uavisac
