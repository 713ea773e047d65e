#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wlprof/clustering.hpp"
#include "wlprof/trace.hpp"

namespace wlprof {

inline constexpr std::size_t kDefaultSilhouetteCap = 20000;

struct SilhouetteOptions {
  std::size_t cap = kDefaultSilhouetteCap;
  std::uint64_t seed = 0;
};

struct SilhouetteResult {
  double mean = 0.0;
  std::size_t points_used = 0;
  bool subsampled = false;
};

// Mean silhouette over non-outlier points; singleton clusters score 0.
// Throws kNumericDomain when fewer than two clusters remain. Above `cap`
// non-outlier points a seeded uniform subsample is scored instead.
SilhouetteResult silhouette(const Matrix& points, std::span<const int> labels, DistanceKind kind,
                            const SilhouetteOptions& options = {});
double silhouette_mean(const Matrix& points, std::span<const int> labels, DistanceKind kind);

// Mean over clusters of max_{j != i} (s_i + s_j) / d(c_i, c_j), with s the
// mean member-to-centroid distance. Coincident centroids give +infinity.
double davies_bouldin(const Matrix& points, std::span<const int> labels, DistanceKind kind);

struct AcquiresWeights {
  double clusters = 1.0 / 3.0;
  double outliers = 1.0 / 3.0;
  double silhouette = 1.0 / 3.0;

  void validate() const;
};

struct AcquiresScore {
  double outliers_score = 0.0;
  double cluster_count_score = 0.0;
  double silhouette_score_mean = 0.0;
  AcquiresWeights weights;
  double total = 0.0;
  std::size_t cluster_count = 0;
  std::size_t outlier_count = 0;
  bool failed = false;  // no clusters at all
};

AcquiresScore acquires(std::span<const int> labels, std::size_t n, std::size_t optimal_cluster_count,
                       double silhouette_mean, const AcquiresWeights& weights = {});

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassReport {
  std::map<int, ClassMetrics> per_class;
  double accuracy = 0.0;
  ClassMetrics macro;
  ClassMetrics weighted;
  std::size_t total = 0;
  std::size_t correct = 0;
};

ClassReport class_report(std::span<const int> predicted, std::span<const int> actual);

}  // namespace wlprof
