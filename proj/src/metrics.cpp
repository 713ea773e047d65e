#include "wlprof/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "wlprof/random.hpp"

namespace wlprof {

namespace {

// Dense cluster index per point (-1 for outliers) and cluster count.
std::pair<std::vector<int>, std::size_t> densify(std::span<const int> labels) {
  std::map<int, int> index;
  for (int l : labels)
    if (l >= 0) index.try_emplace(l, 0);
  int next = 0;
  for (auto& [label, idx] : index) idx = next++;
  std::vector<int> dense(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) dense[i] = index[labels[i]];
  return {dense, index.size()};
}

}  // namespace

SilhouetteResult silhouette(const Matrix& points, std::span<const int> labels, DistanceKind kind,
                            const SilhouetteOptions& options) {
  if (labels.size() != points.rows()) throw Error(ErrorCode::kInvalidArgument, "labels do not match the matrix rows");
  std::vector<std::size_t> used;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) used.push_back(i);

  SilhouetteResult result;
  if (options.cap > 0 && used.size() > options.cap) {
    Rng rng(options.seed);
    auto picks = rng.sample_without_replacement(used.size(), options.cap);
    std::sort(picks.begin(), picks.end());
    std::vector<std::size_t> sub;
    sub.reserve(picks.size());
    for (std::size_t p : picks) sub.push_back(used[p]);
    used = std::move(sub);
    result.subsampled = true;
  }

  std::vector<int> sub_labels;
  sub_labels.reserve(used.size());
  for (std::size_t i : used) sub_labels.push_back(labels[i]);
  auto [dense, k] = densify(sub_labels);
  if (k < 2) throw Error(ErrorCode::kNumericDomain, "silhouette needs at least two clusters");

  std::vector<std::size_t> sizes(k, 0);
  for (int c : dense) ++sizes[static_cast<std::size_t>(c)];

  const std::size_t m = used.size();
  std::vector<double> sums(k);
  double total = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const auto own = static_cast<std::size_t>(dense[a]);
    if (sizes[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      sums[static_cast<std::size_t>(dense[b])] += distance(points.row(used[a]), points.row(used[b]), kind);
    }
    const double intra = sums[own] / static_cast<double>(sizes[own] - 1);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own) nearest = std::min(nearest, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(intra, nearest);
    if (denom > 0.0) total += (nearest - intra) / denom;
  }
  result.mean = total / static_cast<double>(m);
  result.points_used = m;
  return result;
}

double silhouette_mean(const Matrix& points, std::span<const int> labels, DistanceKind kind) {
  return silhouette(points, labels, kind).mean;
}

double davies_bouldin(const Matrix& points, std::span<const int> labels, DistanceKind kind) {
  if (labels.size() != points.rows()) throw Error(ErrorCode::kInvalidArgument, "labels do not match the matrix rows");
  auto [dense, k] = densify(labels);
  if (k < 2) throw Error(ErrorCode::kNumericDomain, "Davies-Bouldin needs at least two clusters");
  const std::size_t dims = points.cols();

  Matrix centroids(k, dims);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (dense[i] < 0) continue;
    const auto c = static_cast<std::size_t>(dense[i]);
    ++sizes[c];
    for (std::size_t d = 0; d < dims; ++d) centroids(c, d) += points(i, d);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t d = 0; d < dims; ++d) centroids(c, d) /= static_cast<double>(sizes[c]);

  std::vector<double> spread(k, 0.0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (dense[i] < 0) continue;
    const auto c = static_cast<std::size_t>(dense[i]);
    spread[c] += distance(points.row(i), centroids.row(c), kind);
  }
  for (std::size_t c = 0; c < k; ++c) spread[c] /= static_cast<double>(sizes[c]);

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double sep = distance(centroids.row(i), centroids.row(j), kind);
      const double ratio = sep == 0.0 ? std::numeric_limits<double>::infinity() : (spread[i] + spread[j]) / sep;
      worst = std::max(worst, ratio);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

void AcquiresWeights::validate() const {
  if (clusters < 0.0 || outliers < 0.0 || silhouette < 0.0)
    throw Error(ErrorCode::kInvalidArgument, "ACQUIRES weights must be nonnegative");
  if (std::abs(clusters + outliers + silhouette - 1.0) > 1e-9)
    throw Error(ErrorCode::kInvalidArgument, "ACQUIRES weights must sum to 1");
}

AcquiresScore acquires(std::span<const int> labels, std::size_t n, std::size_t optimal_cluster_count,
                       double silhouette_mean, const AcquiresWeights& weights) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "ACQUIRES needs a nonempty dataset");
  if (optimal_cluster_count < 1) throw Error(ErrorCode::kInvalidArgument, "optimal cluster count must be at least 1");
  weights.validate();

  std::set<int> clusters;
  std::size_t outliers = 0;
  for (int l : labels) {
    if (l < 0)
      ++outliers;
    else
      clusters.insert(l);
  }
  if (outliers > n) throw Error(ErrorCode::kInvalidArgument, "more outliers than workloads");

  AcquiresScore s;
  s.weights = weights;
  s.cluster_count = clusters.size();
  s.outlier_count = outliers;
  s.outliers_score = 1.0 - static_cast<double>(outliers) / static_cast<double>(n);
  if (clusters.empty()) {
    s.cluster_count_score = 0.0;
    s.failed = true;
  } else {
    const auto opt = static_cast<double>(optimal_cluster_count);
    const auto act = static_cast<double>(clusters.size());
    s.cluster_count_score = 1.0 - std::abs(opt - act) / std::max(opt, act);
  }
  s.silhouette_score_mean = silhouette_mean;
  s.total = weights.clusters * s.cluster_count_score + weights.outliers * s.outliers_score +
            weights.silhouette * s.silhouette_score_mean;
  return s;
}

ClassReport class_report(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw Error(ErrorCode::kInvalidArgument, "prediction and truth lengths differ");
  if (predicted.empty()) throw Error(ErrorCode::kInvalidArgument, "class report of an empty evaluation set");

  std::set<int> classes(actual.begin(), actual.end());
  classes.insert(predicted.begin(), predicted.end());
  std::map<int, std::size_t> tp, fp, fn;
  ClassReport r;
  r.total = predicted.size();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == actual[i]) {
      ++tp[actual[i]];
      ++r.correct;
    } else {
      ++fp[predicted[i]];
      ++fn[actual[i]];
    }
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);

  for (int c : classes) {
    ClassMetrics m;
    const double t = static_cast<double>(tp[c]);
    const double p_den = t + static_cast<double>(fp[c]);
    const double r_den = t + static_cast<double>(fn[c]);
    m.precision = p_den > 0.0 ? t / p_den : 0.0;
    m.recall = r_den > 0.0 ? t / r_den : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.support = tp[c] + fn[c];
    r.per_class[c] = m;
  }
  const auto k = static_cast<double>(classes.size());
  for (const auto& [c, m] : r.per_class) {
    r.macro.precision += m.precision / k;
    r.macro.recall += m.recall / k;
    r.macro.f1 += m.f1 / k;
    const double w = static_cast<double>(m.support) / static_cast<double>(r.total);
    r.weighted.precision += w * m.precision;
    r.weighted.recall += w * m.recall;
    r.weighted.f1 += w * m.f1;
  }
  r.macro.support = r.total;
  r.weighted.support = r.total;
  return r;
}

}  // namespace wlprof
