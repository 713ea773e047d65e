#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wlprof/trace.hpp"

namespace wlprof {

enum class DistanceKind { kEuclidean, kManhattan, kCosine };

std::string_view to_string(DistanceKind kind);
DistanceKind distance_kind_from_string(std::string_view text);

// Cosine distance is 1 - cos(angle), in [0, 2]; a zero vector is at distance
// 1 from everything.
double distance(std::span<const double> a, std::span<const double> b, DistanceKind kind);

// 1 - d / max_distance; 1 when max_distance is 0.
double similarity(std::span<const double> a, std::span<const double> b, DistanceKind kind, double max_distance);

inline constexpr int kOutlierLabel = -1;

// Classical DBSCAN. A point is core when its eps-neighbourhood (d <= eps,
// self included) holds at least min_points points. Points are scanned in
// `scan_order`; a border point reachable from several clusters joins the one
// discovered first. Without an explicit order, rows are scanned in
// lexicographic order of their coordinates, which makes the partition
// independent of row order.
std::vector<int> dbscan(const Matrix& points, double eps, std::size_t min_points, DistanceKind kind,
                        std::optional<std::span<const std::size_t>> scan_order = std::nullopt);

std::vector<std::size_t> lexicographic_order(const Matrix& points);

// One merge of the single-linkage dendrogram. Nodes 0..n-1 are points,
// merge i creates node n + i.
struct LinkageStep {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

// Core distance: distance to the k-th nearest neighbour, the point itself
// counted as the first.
std::vector<double> core_distances(const Matrix& points, std::size_t k, DistanceKind kind);

// Single-linkage dendrogram over mutual reachability
// max(core_a, core_b, d(a, b)), via Prim's minimum spanning tree.
std::vector<LinkageStep> mutual_reachability_linkage(const Matrix& points, std::size_t k, DistanceKind kind);

struct CondensedCluster {
  std::size_t parent = 0;  // index into the cluster list; root points to itself
  double birth_lambda = 0.0;
  double stability = 0.0;
  std::size_t size = 0;
  std::vector<std::size_t> children;
  std::vector<std::size_t> points;  // points that fall out of this cluster directly
};

// Condensed tree with lambda = 1 / distance. Cluster 0 is the root.
std::vector<CondensedCluster> condense_tree(const std::vector<LinkageStep>& linkage, std::size_t n,
                                            std::size_t min_cluster_size);

// Excess-of-mass selection. The root is only selected when the tree has no
// other cluster.
std::vector<std::size_t> select_clusters(const std::vector<CondensedCluster>& tree);

std::vector<int> hdbscan(const Matrix& points, std::size_t min_cluster_size, DistanceKind kind);

// Relabels so clusters are numbered 0.. in order of their first member;
// outliers keep -1.
std::vector<int> canonical_labels(std::span<const int> labels);

}  // namespace wlprof
