#include "uavisac/hdbscan.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace uavisac {

void HdbscanParams::validate() const {
  if (min_cluster_size < 2) throw Error("hdbscan: min_cluster_size must be >= 2");
  if (min_samples < 1) throw Error("hdbscan: min_samples must be >= 1");
  if (!(epsilon >= 0.0)) throw Error("hdbscan: epsilon must be >= 0");
}

std::vector<double> core_distances(std::span<const Vec2> points, int min_samples) {
  const std::size_t n = points.size();
  const std::size_t kth = std::min<std::size_t>(static_cast<std::size_t>(min_samples), n) - 1;
  std::vector<double> core(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[j] = (points[i] - points[j]).norm();
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kth), d.end());
    core[i] = d[kth];
  }
  return core;
}

std::vector<WeightedEdge> mutual_reachability_mst(std::span<const Vec2> points, int min_samples) {
  const int n = static_cast<int>(points.size());
  std::vector<WeightedEdge> edges;
  if (n < 2) return edges;
  const auto core = core_distances(points, min_samples);
  auto mrd = [&](int a, int b) {
    return std::max({core[static_cast<std::size_t>(a)], core[static_cast<std::size_t>(b)],
                     (points[static_cast<std::size_t>(a)] - points[static_cast<std::size_t>(b)]).norm()});
  };

  std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> from(static_cast<std::size_t>(n), -1);
  int current = 0;
  in_tree[0] = true;
  for (int added = 1; added < n; ++added) {
    int next = -1;
    for (int j = 0; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (in_tree[uj]) continue;
      const double w = mrd(current, j);
      if (w < best[uj]) {
        best[uj] = w;
        from[uj] = current;
      }
      if (next < 0 || best[uj] < best[static_cast<std::size_t>(next)]) next = j;
    }
    in_tree[static_cast<std::size_t>(next)] = true;
    edges.push_back({from[static_cast<std::size_t>(next)], next, best[static_cast<std::size_t>(next)]});
    current = next;
  }
  return edges;
}

namespace {

struct Merge {
  int left = 0;
  int right = 0;
  double distance = 0.0;
  int size = 0;
};

// Single-linkage dendrogram from MST edges; node ids >= n are merges (id - n indexes the vector).
std::vector<Merge> single_linkage(std::vector<WeightedEdge> edges, int n) {
  std::stable_sort(edges.begin(), edges.end(),
                   [](const WeightedEdge& a, const WeightedEdge& b) { return a.weight < b.weight; });
  std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> size(static_cast<std::size_t>(2 * n - 1), 1);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  std::vector<Merge> merges;
  int next = n;
  for (const auto& e : edges) {
    const int a = find(e.a);
    const int b = find(e.b);
    const int s = size[static_cast<std::size_t>(a)] + size[static_cast<std::size_t>(b)];
    merges.push_back({a, b, e.weight, s});
    parent[static_cast<std::size_t>(a)] = next;
    parent[static_cast<std::size_t>(b)] = next;
    size[static_cast<std::size_t>(next)] = s;
    ++next;
  }
  return merges;
}

struct CondensedEntry {
  int parent = 0;  // cluster label (>= n)
  int child = 0;   // point index (< n) or cluster label (>= n)
  double lambda = 0.0;
  int child_size = 0;
};

double to_lambda(double distance) { return 1.0 / std::max(distance, 1e-12); }

std::vector<CondensedEntry> condense(const std::vector<Merge>& merges, int n, int min_cluster_size) {
  const int root = 2 * n - 2;
  auto node_size = [&](int node) { return node < n ? 1 : merges[static_cast<std::size_t>(node - n)].size; };
  auto leaves_under = [&](int node) {
    std::vector<int> out;
    std::vector<int> stack{node};
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      if (x < n) {
        out.push_back(x);
      } else {
        stack.push_back(merges[static_cast<std::size_t>(x - n)].left);
        stack.push_back(merges[static_cast<std::size_t>(x - n)].right);
      }
    }
    return out;
  };

  std::vector<CondensedEntry> tree;
  std::map<int, int> relabel{{root, n}};
  int next_label = n + 1;
  std::vector<int> queue{root};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int node = queue[qi];
    if (node < n) continue;
    const auto& m = merges[static_cast<std::size_t>(node - n)];
    const double lambda = to_lambda(m.distance);
    const int label = relabel.at(node);
    const int ls = node_size(m.left);
    const int rs = node_size(m.right);
    const bool left_big = ls >= min_cluster_size;
    const bool right_big = rs >= min_cluster_size;
    auto fall_out = [&](int sub) {
      for (int p : leaves_under(sub)) tree.push_back({label, p, lambda, 1});
    };
    if (left_big && right_big) {
      for (int side : {m.left, m.right}) {
        relabel[side] = next_label;
        tree.push_back({label, next_label, lambda, node_size(side)});
        ++next_label;
        queue.push_back(side);
      }
    } else if (!left_big && !right_big) {
      fall_out(m.left);
      fall_out(m.right);
    } else if (!left_big) {
      relabel[m.right] = label;
      fall_out(m.left);
      queue.push_back(m.right);
    } else {
      relabel[m.left] = label;
      fall_out(m.right);
      queue.push_back(m.left);
    }
  }
  return tree;
}

}  // namespace

ClusterResult hdbscan_cluster(std::span<const Vec2> points, const HdbscanParams& params) {
  params.validate();
  const int n = static_cast<int>(points.size());
  if (n == 0) throw Error("hdbscan: empty input");

  ClusterResult result;
  result.labels.assign(static_cast<std::size_t>(n), ClusterResult::kNoise);
  if (n < params.min_cluster_size) return result;

  const auto merges = single_linkage(mutual_reachability_mst(points, params.min_samples), n);
  const auto tree = condense(merges, n, params.min_cluster_size);
  const int root = n;

  // Cluster bookkeeping indexed by label.
  std::map<int, double> birth{{root, 0.0}};
  std::map<int, int> cluster_parent;
  std::map<int, std::vector<int>> cluster_children;
  std::map<int, double> stability{{root, 0.0}};
  std::vector<int> point_parent(static_cast<std::size_t>(n), root);
  std::vector<double> point_lambda(static_cast<std::size_t>(n), 0.0);
  for (const auto& e : tree) {
    if (e.child >= n) {
      birth[e.child] = e.lambda;
      cluster_parent[e.child] = e.parent;
      cluster_children[e.parent].push_back(e.child);
      stability.emplace(e.child, 0.0);
    } else {
      point_parent[static_cast<std::size_t>(e.child)] = e.parent;
      point_lambda[static_cast<std::size_t>(e.child)] = e.lambda;
    }
  }
  for (const auto& e : tree) stability[e.parent] += (e.lambda - birth.at(e.parent)) * e.child_size;

  // Excess of mass, children before parents (labels grow with depth). The root
  // competes too, so a single dense group comes out as one cluster.
  std::map<int, bool> selected;
  std::map<int, double> subtree = stability;
  for (auto it = stability.rbegin(); it != stability.rend(); ++it) {
    const int c = it->first;
    double child_sum = 0.0;
    for (int ch : cluster_children[c]) child_sum += subtree.at(ch);
    if (!cluster_children[c].empty() && child_sum > stability.at(c)) {
      selected[c] = false;
      subtree[c] = child_sum;
    } else {
      selected[c] = true;
      std::vector<int> stack(cluster_children[c].begin(), cluster_children[c].end());
      while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        selected[x] = false;
        for (int y : cluster_children[x]) stack.push_back(y);
      }
    }
  }

  std::set<int> chosen;
  for (const auto& [c, on] : selected)
    if (on) chosen.insert(c);

  // Epsilon merge: a selected cluster born below epsilon is replaced by its
  // first ancestor born above epsilon (or the root).
  if (params.epsilon > 0.0 && !(chosen.size() == 1 && *chosen.begin() == root)) {
    std::set<int> merged;
    std::set<int> processed;
    for (int leaf : chosen) {
      const double eps_leaf = leaf == root ? std::numeric_limits<double>::infinity() : 1.0 / birth.at(leaf);
      if (eps_leaf >= params.epsilon) {
        merged.insert(leaf);
        continue;
      }
      if (processed.count(leaf)) continue;
      int node = leaf;
      while (node != root) {
        const int parent = cluster_parent.at(node);
        if (parent == root) {
          node = root;
          break;
        }
        if (1.0 / birth.at(parent) > params.epsilon) {
          node = parent;
          break;
        }
        node = parent;
      }
      merged.insert(node);
      std::vector<int> stack(cluster_children[node].begin(), cluster_children[node].end());
      while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        processed.insert(x);
        for (int y : cluster_children[x]) stack.push_back(y);
      }
    }
    // Drop anything nested below another survivor.
    chosen.clear();
    for (int c : merged) {
      bool nested = false;
      for (int a = c; a != root;) {
        a = cluster_parent.at(a);
        if (merged.count(a)) {
          nested = true;
          break;
        }
      }
      if (!nested) chosen.insert(c);
    }
  }

  const bool root_only = chosen.size() == 1 && *chosen.begin() == root;
  double root_cut = 0.0;
  if (root_only) {
    if (params.epsilon > 0.0) {
      root_cut = 1.0 / params.epsilon;
    } else {
      for (const auto& e : tree)
        if (e.parent == root) root_cut = std::max(root_cut, e.lambda);
    }
  }

  std::vector<int> raw(static_cast<std::size_t>(n), ClusterResult::kNoise);
  for (int p = 0; p < n; ++p) {
    const auto up = static_cast<std::size_t>(p);
    int c = point_parent[up];
    while (c != root && !chosen.count(c)) c = cluster_parent.at(c);
    if (c != root) {
      raw[up] = c;
    } else if (root_only && point_lambda[up] >= root_cut) {
      raw[up] = root;
    }
  }

  // Relabel by smallest member index.
  std::map<int, int> dense;
  for (int p = 0; p < n; ++p) {
    const int c = raw[static_cast<std::size_t>(p)];
    if (c == ClusterResult::kNoise || dense.count(c)) continue;
    const int id = static_cast<int>(dense.size());
    dense[c] = id;
  }
  result.clusters.resize(dense.size());
  for (int p = 0; p < n; ++p) {
    const int c = raw[static_cast<std::size_t>(p)];
    if (c == ClusterResult::kNoise) continue;
    const int id = dense.at(c);
    result.labels[static_cast<std::size_t>(p)] = id;
    result.clusters[static_cast<std::size_t>(id)].push_back(p);
  }
  for (const auto& members : result.clusters) {
    Vec2 mean = Vec2::Zero();
    for (int p : members) mean += points[static_cast<std::size_t>(p)];
    result.centroids.push_back(mean / static_cast<double>(members.size()));
  }
  return result;
}

}  // namespace uavisac
