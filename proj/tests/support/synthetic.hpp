#pragma once

// Synthetic workload traces with known generative structure.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wlprof/random.hpp"
#include "wlprof/trace.hpp"

namespace wlprof::testing {

// Blob centers in native units, well separated on a log scale.
inline const std::vector<std::vector<double>>& blob_centers() {
  static const std::vector<std::vector<double>> centers{
      {10, 200, 30},   {80, 40, 500},  {300, 900, 60},  {30, 2000, 1500},
      {900, 100, 200}, {2500, 3000, 8}, {150, 15, 4000}, {5, 600, 9000},
  };
  return centers;
}

struct TraceSpec {
  std::size_t n = 1000;
  std::vector<std::size_t> clusters{0, 1, 2, 3, 4};  // blobs drawn from
  std::vector<double> weights;                        // empty: uniform
  double spread = 0.08;                               // relative std
  std::uint64_t seed = 1;
  std::string id_prefix = "w";
  std::int64_t start_time = 0;
  bool noise_metadata = true;  // user, gpu_type, cpu_request columns
};

struct SyntheticTrace {
  std::string csv;
  IngestDescriptor descriptor;
  Dataset dataset;
  std::vector<int> truth;  // blob index per dataset row
};

inline std::vector<std::string> runtime_names() { return {"cpu", "mem", "duration"}; }

inline IngestDescriptor trace_descriptor(bool noise_metadata) {
  IngestDescriptor d;
  d.columns["job_id"] = ColumnRole::kId;
  d.columns["submit_time"] = ColumnRole::kTimestamp;
  d.columns["workload_type"] = ColumnRole::kMetadata;
  if (noise_metadata) {
    d.columns["user"] = ColumnRole::kMetadata;
    d.columns["gpu_type"] = ColumnRole::kMetadata;
    d.columns["cpu_request"] = ColumnRole::kMetadataQuartile;
  }
  for (const auto& r : runtime_names()) d.columns[r] = ColumnRole::kRuntime;
  return d;
}

// Metadata "workload_type" = "type<blob>" determines the blob; the other
// metadata columns are independent noise.
inline SyntheticTrace make_trace(const TraceSpec& spec) {
  Rng rng(spec.seed);
  const auto& centers = blob_centers();
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t k = 0; k < spec.clusters.size(); ++k) {
    total += spec.weights.empty() ? 1.0 : spec.weights[k];
    cumulative.push_back(total);
  }
  std::string csv = "job_id,submit_time,workload_type";
  if (spec.noise_metadata) csv += ",user,gpu_type,cpu_request";
  for (const auto& r : runtime_names()) csv += "," + r;
  csv += "\n";
  std::vector<int> truth;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double u = rng.uniform() * total;
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
    const std::size_t blob = spec.clusters[k];
    truth.push_back(static_cast<int>(blob));
    csv += spec.id_prefix + std::to_string(i) + "," + std::to_string(spec.start_time + static_cast<std::int64_t>(i)) +
           ",type" + std::to_string(blob);
    if (spec.noise_metadata) {
      csv += ",u" + std::to_string(rng.index(8));
      csv += rng.index(2) == 0 ? ",none" : ",T4";
      csv += "," + std::to_string(1 + rng.index(64));
    }
    for (double c : centers[blob]) {
      double v = c * (1.0 + spec.spread * rng.normal());
      v = std::max(v, c * 0.05);
      csv += "," + format_double(v);
    }
    csv += "\n";
  }
  auto descriptor = trace_descriptor(spec.noise_metadata);
  auto loaded = parse_trace(csv, descriptor);
  return {std::move(csv), std::move(descriptor), std::move(loaded.dataset), std::move(truth)};
}

// Isotropic Gaussian blobs around the given centers.
inline Matrix gaussian_points(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double sigma,
                              Rng& rng, std::vector<int>* truth = nullptr) {
  const std::size_t dims = centers.front().size();
  Matrix m(centers.size() * per_blob, dims);
  std::size_t r = 0;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t i = 0; i < per_blob; ++i, ++r) {
      for (std::size_t d = 0; d < dims; ++d) m(r, d) = centers[c][d] + sigma * rng.normal();
      if (truth) truth->push_back(static_cast<int>(c));
    }
  }
  return m;
}

inline Matrix uniform_points(std::size_t n, std::size_t dims, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Matrix m(n, dims);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dims; ++d) m(i, d) = rng.uniform(lo, hi);
  return m;
}

inline FeatureMatrix as_features(Matrix m) {
  FeatureMatrix f;
  for (std::size_t d = 0; d < m.cols(); ++d) f.feature_names.push_back("f" + std::to_string(d));
  f.values = std::move(m);
  return f;
}

// Same partition up to renaming of the non-negative labels; -1 must match.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [x, fresh_x] = ab.try_emplace(a[i], b[i]);
    auto [y, fresh_y] = ba.try_emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

}  // namespace wlprof::testing
