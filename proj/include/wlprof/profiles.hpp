#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wlprof/clustering.hpp"
#include "wlprof/metrics.hpp"
#include "wlprof/preprocess.hpp"
#include "wlprof/trace.hpp"

namespace wlprof {

enum class Algorithm { kDbscan, kHdbscan };

std::string_view to_string(Algorithm algorithm);
Algorithm algorithm_from_string(std::string_view text);

struct ClusteringConfig {
  Algorithm algorithm = Algorithm::kHdbscan;
  TransformKind transform = TransformKind::kPower;
  DistanceKind distance = DistanceKind::kEuclidean;
  std::size_t min_points = 50;
  double eps = 0.0;  // DBSCAN only
  std::uint64_t seed = 0;

  void validate() const;
};

// Percentiles stored for every feature.
inline constexpr std::array<int, 5> kProfilePercentiles{5, 25, 50, 75, 95};

struct FeatureStats {
  // quantiles[p] is the p-th percentile, p = 0..100, linear interpolation.
  std::vector<double> quantiles;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  // 0 when undefined (fewer than three members or constant values).
  double skewness = 0.0;
  bool skewness_defined = false;
  double min = 0.0;
  double max = 0.0;

  double percentile(int p) const { return quantiles.at(static_cast<std::size_t>(p)); }
  // Exact at integer percentiles, linear between neighbouring grid points.
  double quantile(double q) const;
};

FeatureStats feature_stats(std::vector<double> values);

struct ProfileGroup {
  int label = 0;
  std::vector<std::string> member_ids;  // ascending
  std::size_t member_count = 0;
  std::vector<double> centroid;  // transformed space
  std::string medoid_id;
  std::map<std::string, FeatureStats> stats;  // runtime feature -> stats, native units
  std::map<std::string, std::map<std::string, std::size_t>> metadata_bag;
  Timestamp last_update = 0;
};

struct ProfileSet {
  std::vector<ProfileGroup> groups;
  std::vector<std::string> outlier_ids;
  std::size_t outlier_count = 0;
  ClusteringConfig config;
  TransformSpec transform_spec;
  double distance_threshold = 0.0;
  Timestamp created_at = 0;
  std::vector<std::string> runtime_features;
  std::optional<AcquiresScore> quality;

  const ProfileGroup* find(int label) const;
  std::size_t workload_count() const { return outlier_count + total_members(); }
  std::size_t total_members() const;

  // Nearest centroid in transformed space and its distance.
  std::pair<int, double> nearest(std::span<const double> raw_runtime) const;
  // No centroid within distance_threshold.
  bool is_outlier(std::span<const double> raw_runtime) const;

  std::string to_json_text(bool include_member_ids = false) const;
  static ProfileSet from_json_text(const std::string& text);
};

// `labels` aligned with dataset order, -1 for outliers. Clustering space is
// `spec` applied to the runtime matrix; statistics stay in native units.
ProfileSet build_profiles(const Dataset& dataset, std::span<const int> labels, const ClusteringConfig& config,
                          const TransformSpec& spec, Timestamp now);

// Runs one configuration on the dataset: fit transform, cluster.
struct ClusteringRun {
  TransformSpec spec;
  FeatureMatrix transformed;
  std::vector<int> labels;
};
ClusteringRun run_clustering(const Dataset& dataset, const ClusteringConfig& config);

struct GridSpec {
  std::vector<Algorithm> algorithms{Algorithm::kHdbscan};
  std::vector<TransformKind> transforms{TransformKind::kStandard, TransformKind::kMinMax, TransformKind::kRobust,
                                        TransformKind::kPower};
  std::vector<DistanceKind> distances{DistanceKind::kEuclidean, DistanceKind::kManhattan, DistanceKind::kCosine};
  std::vector<std::size_t> min_points{50, 100, 200, 300, 400, 600, 1000};
  std::vector<double> eps{};  // DBSCAN combinations only

  std::vector<ClusteringConfig> combinations(std::uint64_t seed) const;
};

struct GridRow {
  ClusteringConfig config;
  bool valid = false;
  std::string note;
  std::size_t clusters = 0;
  std::size_t outliers = 0;
  double mean_cluster_size = 0.0;
  std::optional<double> silhouette;
  bool silhouette_subsampled = false;
  std::optional<double> davies_bouldin;
  double acquires = 0.0;
};

struct GridOptions {
  std::size_t optimal_cluster_count = 1;
  AcquiresWeights weights{};
  std::size_t silhouette_cap = kDefaultSilhouetteCap;
  std::uint64_t seed = 0;
  Timestamp now = 0;
};

struct GridResult {
  ClusteringConfig best;
  std::size_t best_index = 0;
  ProfileSet profiles;
  std::vector<GridRow> report;
};

// Evaluates every combination and keeps the highest ACQUIRES; ties go to
// fewer outliers, then smaller min_points, then declaration order.
GridResult grid_search(const Dataset& dataset, const GridSpec& grid, const GridOptions& options);

std::string grid_report_csv(const std::vector<GridRow>& rows);

}  // namespace wlprof
