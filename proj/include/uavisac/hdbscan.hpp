#pragma once

#include <span>
#include <vector>

#include "uavisac/types.hpp"

namespace uavisac {

struct HdbscanParams {
  int min_cluster_size = 2;
  int min_samples = 2;
  double epsilon = 0.0;  ///< clusters born below this distance are merged upwards

  void validate() const;
};

struct ClusterResult {
  static constexpr int kNoise = -1;

  std::vector<int> labels;                 ///< per point: cluster index or kNoise
  std::vector<std::vector<int>> clusters;  ///< member indices per cluster, ascending
  std::vector<Vec2> centroids;             ///< arithmetic mean of each cluster's members

  int cluster_count() const { return static_cast<int>(clusters.size()); }
};

struct WeightedEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

/// Distance to the min_samples-th nearest neighbour, counting the point itself.
std::vector<double> core_distances(std::span<const Vec2> points, int min_samples);

/// Minimum spanning tree of the complete mutual-reachability graph
/// max(core_a, core_b, |a - b|), built with Prim's algorithm in O(n^2).
std::vector<WeightedEdge> mutual_reachability_mst(std::span<const Vec2> points, int min_samples);

/// Full HDBSCAN: core distances, mutual reachability, MST, single-linkage
/// hierarchy, condensed tree, excess-of-mass selection with the epsilon merge.
/// Cluster indices are ordered by each cluster's smallest member index, so the
/// partition does not depend on input order.
ClusterResult hdbscan_cluster(std::span<const Vec2> points, const HdbscanParams& params);

}  // namespace uavisac
