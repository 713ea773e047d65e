#include "wlprof/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "json.hpp"
#include "wlprof/stats.hpp"

namespace wlprof {

using nlohmann::json;

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kDbscan ? "dbscan" : "hdbscan";
}

Algorithm algorithm_from_string(std::string_view text) {
  if (text == "dbscan") return Algorithm::kDbscan;
  if (text == "hdbscan") return Algorithm::kHdbscan;
  if (text == "optics")
    throw Error(ErrorCode::kInvalidArgument, "OPTICS is not available; use hdbscan or dbscan");
  throw Error(ErrorCode::kInvalidArgument, "unknown clustering algorithm '" + std::string(text) + "'");
}

void ClusteringConfig::validate() const {
  if (min_points < 2) throw Error(ErrorCode::kInvalidArgument, "min_points must be at least 2");
  if (algorithm == Algorithm::kDbscan && !(eps > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "DBSCAN requires a positive eps");
}

double FeatureStats::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "quantile outside [0, 1]");
  const double pos = q * 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo >= 100) return quantiles.back();
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return quantiles[lo];
  return quantiles[lo] + frac * (quantiles[lo + 1] - quantiles[lo]);
}

FeatureStats feature_stats(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "statistics of an empty group");
  FeatureStats s;
  const double mu = mean(values);
  s.mean = mu;
  s.std = stddev(values);
  try {
    s.skewness = skewness(values);
    s.skewness_defined = true;
  } catch (const Error&) {
    s.skewness = 0.0;
    s.skewness_defined = false;
  }
  std::sort(values.begin(), values.end());
  s.quantiles.resize(101);
  for (int p = 0; p <= 100; ++p) s.quantiles[static_cast<std::size_t>(p)] = quantile_sorted(values, p / 100.0);
  s.median = s.quantiles[50];
  s.min = values.front();
  s.max = values.back();
  // Summation rounding can push the mean a hair outside [min, max].
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

const ProfileGroup* ProfileSet::find(int label) const {
  for (const auto& g : groups)
    if (g.label == label) return &g;
  return nullptr;
}

std::size_t ProfileSet::total_members() const {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.member_count;
  return total;
}

std::pair<int, double> ProfileSet::nearest(std::span<const double> raw_runtime) const {
  if (groups.empty()) throw Error(ErrorCode::kEmptyProfileSet, "profile set has no groups");
  const auto point = transform_spec.apply_row(raw_runtime);
  int best_label = groups.front().label;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : groups) {
    const double d = distance(point, g.centroid, config.distance);
    if (d < best) {
      best = d;
      best_label = g.label;
    }
  }
  return {best_label, best};
}

bool ProfileSet::is_outlier(std::span<const double> raw_runtime) const {
  return nearest(raw_runtime).second > distance_threshold;
}

namespace {

// Groups smaller than min_points become outliers. DBSCAN can produce them
// when border points are claimed by an earlier cluster.
void enforce_min_size(std::vector<int>& labels, std::size_t min_points) {
  std::map<int, std::size_t> sizes;
  for (int l : labels)
    if (l >= 0) ++sizes[l];
  for (int& l : labels)
    if (l >= 0 && sizes[l] < min_points) l = kOutlierLabel;
  labels = canonical_labels(labels);
}

json stats_to_json(const FeatureStats& s) {
  json j;
  j["quantiles"] = s.quantiles;
  json pct = json::object();
  for (int p : kProfilePercentiles) pct["p" + std::to_string(p)] = s.percentile(p);
  j["percentiles"] = pct;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["std"] = s.std;
  j["skewness"] = s.skewness;
  j["skewness_defined"] = s.skewness_defined;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

FeatureStats stats_from_json(const json& j) {
  FeatureStats s;
  s.quantiles = j.at("quantiles").get<std::vector<double>>();
  if (s.quantiles.size() != 101) throw Error(ErrorCode::kFormat, "feature statistics need 101 quantiles");
  s.mean = j.at("mean").get<double>();
  s.median = j.at("median").get<double>();
  s.std = j.at("std").get<double>();
  s.skewness = j.at("skewness").get<double>();
  s.skewness_defined = j.at("skewness_defined").get<bool>();
  s.min = j.at("min").get<double>();
  s.max = j.at("max").get<double>();
  return s;
}

json config_to_json(const ClusteringConfig& c) {
  json j;
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["transform"] = std::string(to_string(c.transform));
  j["distance"] = std::string(to_string(c.distance));
  j["min_points"] = c.min_points;
  j["eps"] = c.eps;
  j["seed"] = c.seed;
  return j;
}

ClusteringConfig config_from_json(const json& j) {
  ClusteringConfig c;
  c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  c.transform = transform_kind_from_string(j.at("transform").get<std::string>());
  c.distance = distance_kind_from_string(j.at("distance").get<std::string>());
  c.min_points = j.at("min_points").get<std::size_t>();
  c.eps = j.value("eps", 0.0);
  c.seed = j.value("seed", std::uint64_t{0});
  return c;
}

json quality_to_json(const AcquiresScore& q) {
  json j;
  j["total"] = q.total;
  j["outliers_score"] = q.outliers_score;
  j["cluster_count_score"] = q.cluster_count_score;
  j["silhouette_score_mean"] = q.silhouette_score_mean;
  j["weights"] = {q.weights.clusters, q.weights.outliers, q.weights.silhouette};
  j["cluster_count"] = q.cluster_count;
  j["outlier_count"] = q.outlier_count;
  j["failed"] = q.failed;
  return j;
}

AcquiresScore quality_from_json(const json& j) {
  AcquiresScore q;
  q.total = j.at("total").get<double>();
  q.outliers_score = j.at("outliers_score").get<double>();
  q.cluster_count_score = j.at("cluster_count_score").get<double>();
  q.silhouette_score_mean = j.at("silhouette_score_mean").get<double>();
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != 3) throw Error(ErrorCode::kFormat, "ACQUIRES weights need three entries");
  q.weights = {w[0], w[1], w[2]};
  q.cluster_count = j.at("cluster_count").get<std::size_t>();
  q.outlier_count = j.at("outlier_count").get<std::size_t>();
  q.failed = j.at("failed").get<bool>();
  return q;
}

}  // namespace

std::string ProfileSet::to_json_text(bool include_member_ids) const {
  json doc;
  doc["format"] = "wlprof-profiles";
  doc["version"] = 1;
  doc["config"] = config_to_json(config);
  doc["transform"] = json::parse(transform_spec.to_json_text());
  doc["distance_threshold"] = distance_threshold;
  doc["created_at"] = created_at;
  doc["runtime_features"] = runtime_features;
  doc["outlier_count"] = outlier_count;
  if (include_member_ids) doc["outlier_ids"] = outlier_ids;
  if (quality) doc["quality"] = quality_to_json(*quality);
  json gs = json::array();
  for (const auto& g : groups) {
    json gj;
    gj["label"] = g.label;
    gj["member_count"] = g.member_count;
    if (include_member_ids) gj["member_ids"] = g.member_ids;
    gj["centroid"] = g.centroid;
    gj["medoid_id"] = g.medoid_id;
    gj["last_update"] = g.last_update;
    json st = json::object();
    for (const auto& [name, s] : g.stats) st[name] = stats_to_json(s);
    gj["stats"] = st;
    gj["metadata_bag"] = g.metadata_bag;
    gs.push_back(gj);
  }
  doc["groups"] = gs;
  return doc.dump(2) + "\n";
}

ProfileSet ProfileSet::from_json_text(const std::string& text) {
  try {
    auto doc = json::parse(text);
    if (doc.value("format", "") != "wlprof-profiles")
      throw Error(ErrorCode::kFormat, "not a profile set document");
    if (doc.at("version").get<int>() != 1) throw Error(ErrorCode::kFormat, "unsupported profile set version");
    ProfileSet ps;
    ps.config = config_from_json(doc.at("config"));
    ps.transform_spec = TransformSpec::from_json_text(doc.at("transform").dump());
    ps.distance_threshold = doc.at("distance_threshold").get<double>();
    ps.created_at = doc.at("created_at").get<Timestamp>();
    ps.runtime_features = doc.at("runtime_features").get<std::vector<std::string>>();
    ps.outlier_count = doc.at("outlier_count").get<std::size_t>();
    if (doc.contains("outlier_ids")) ps.outlier_ids = doc["outlier_ids"].get<std::vector<std::string>>();
    if (doc.contains("quality")) ps.quality = quality_from_json(doc["quality"]);
    for (const auto& gj : doc.at("groups")) {
      ProfileGroup g;
      g.label = gj.at("label").get<int>();
      g.member_count = gj.at("member_count").get<std::size_t>();
      if (gj.contains("member_ids")) g.member_ids = gj["member_ids"].get<std::vector<std::string>>();
      g.centroid = gj.at("centroid").get<std::vector<double>>();
      if (g.centroid.size() != ps.runtime_features.size())
        throw Error(ErrorCode::kFormat, "centroid dimension does not match the runtime features");
      g.medoid_id = gj.at("medoid_id").get<std::string>();
      g.last_update = gj.at("last_update").get<Timestamp>();
      for (const auto& [name, sj] : gj.at("stats").items()) g.stats[name] = stats_from_json(sj);
      g.metadata_bag = gj.at("metadata_bag").get<std::map<std::string, std::map<std::string, std::size_t>>>();
      ps.groups.push_back(std::move(g));
    }
    return ps;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed profile set: ") + e.what());
  }
}

ProfileSet build_profiles(const Dataset& dataset, std::span<const int> labels, const ClusteringConfig& config,
                          const TransformSpec& spec, Timestamp now) {
  if (labels.size() != dataset.size()) throw Error(ErrorCode::kInvalidArgument, "labels are not aligned with the dataset");
  std::map<int, std::vector<std::size_t>> members;
  ProfileSet ps;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0)
      members[labels[i]].push_back(i);
    else
      ps.outlier_ids.push_back(dataset[i].id);
  }
  if (members.empty()) throw Error(ErrorCode::kEmptyProfileSet, "every workload was labelled an outlier");
  std::sort(ps.outlier_ids.begin(), ps.outlier_ids.end());
  ps.outlier_count = ps.outlier_ids.size();
  ps.config = config;
  ps.transform_spec = spec;
  ps.created_at = now;
  ps.runtime_features = dataset.schema_runtime();

  const auto transformed = spec.apply(runtime_matrix(dataset));
  const auto& x = transformed.values;
  const std::size_t dims = x.cols();
  std::vector<double> spread;

  for (const auto& [label, rows] : members) {
    if (rows.size() < 2) throw Error(ErrorCode::kInvalidArgument, "profile group with a single member");
    ProfileGroup g;
    g.label = label;
    g.member_count = rows.size();
    for (std::size_t r : rows) g.member_ids.push_back(dataset[r].id);
    std::sort(g.member_ids.begin(), g.member_ids.end());

    g.centroid.assign(dims, 0.0);
    for (std::size_t r : rows)
      for (std::size_t d = 0; d < dims; ++d) g.centroid[d] += x(r, d);
    for (double& v : g.centroid) v /= static_cast<double>(rows.size());
    for (std::size_t r : rows) spread.push_back(distance(x.row(r), g.centroid, config.distance));

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a : rows) {
      double sum = 0.0;
      for (std::size_t b : rows) sum += distance(x.row(a), x.row(b), config.distance);
      if (sum < best || (sum == best && dataset[a].id < g.medoid_id)) {
        best = sum;
        g.medoid_id = dataset[a].id;
      }
    }

    for (std::size_t f = 0; f < dataset.schema_runtime().size(); ++f) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (std::size_t r : rows) values.push_back(dataset[r].runtime[f]);
      g.stats[dataset.schema_runtime()[f]] = feature_stats(std::move(values));
    }
    for (std::size_t m = 0; m < dataset.schema_metadata().size(); ++m) {
      auto& bag = g.metadata_bag[dataset.schema_metadata()[m]];
      for (std::size_t r : rows) ++bag[dataset[r].metadata[m]];
    }
    g.last_update = now;
    ps.groups.push_back(std::move(g));
  }
  ps.distance_threshold = quantile(std::move(spread), 0.95);
  return ps;
}

ClusteringRun run_clustering(const Dataset& dataset, const ClusteringConfig& config) {
  config.validate();
  if (dataset.size() < 1) throw Error(ErrorCode::kInvalidArgument, "clustering an empty dataset");
  ClusteringRun run;
  auto [spec, transformed] = fit_transform(runtime_matrix(dataset), config.transform);
  run.spec = std::move(spec);
  run.transformed = std::move(transformed);
  if (config.algorithm == Algorithm::kHdbscan) {
    run.labels = hdbscan(run.transformed.values, config.min_points, config.distance);
  } else {
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dataset[a].id < dataset[b].id; });
    run.labels = dbscan(run.transformed.values, config.eps, config.min_points, config.distance,
                        std::span<const std::size_t>(order));
    enforce_min_size(run.labels, config.min_points);
  }
  return run;
}

std::vector<ClusteringConfig> GridSpec::combinations(std::uint64_t seed) const {
  std::vector<ClusteringConfig> out;
  for (auto a : algorithms)
    for (auto t : transforms)
      for (auto d : distances)
        for (auto m : min_points) {
          if (a == Algorithm::kDbscan) {
            for (double e : eps) out.push_back({a, t, d, m, e, seed});
          } else {
            out.push_back({a, t, d, m, 0.0, seed});
          }
        }
  return out;
}

GridResult grid_search(const Dataset& dataset, const GridSpec& grid, const GridOptions& options) {
  const auto combos = grid.combinations(options.seed);
  if (combos.empty()) throw Error(ErrorCode::kInvalidArgument, "grid has no combinations");
  options.weights.validate();

  GridResult result;
  std::optional<std::size_t> best;
  std::optional<ClusteringRun> best_run;
  for (std::size_t i = 0; i < combos.size(); ++i) {
    GridRow row;
    row.config = combos[i];
    ClusteringRun run;
    try {
      if (dataset.size() < combos[i].min_points)
        throw Error(ErrorCode::kInvalidArgument, "fewer workloads than min_points");
      run = run_clustering(dataset, combos[i]);
    } catch (const Error& e) {
      row.note = e.what();
      result.report.push_back(row);
      continue;
    }
    std::set<int> clusters;
    for (int l : run.labels) {
      if (l < 0)
        ++row.outliers;
      else
        clusters.insert(l);
    }
    row.clusters = clusters.size();
    if (row.clusters == 0) {
      row.note = "no clusters";
      result.report.push_back(row);
      continue;
    }
    row.valid = true;
    row.mean_cluster_size = static_cast<double>(dataset.size() - row.outliers) / static_cast<double>(row.clusters);
    double sc = 0.0;
    if (row.clusters >= 2) {
      auto s = silhouette(run.transformed.values, run.labels, combos[i].distance,
                          {options.silhouette_cap, options.seed});
      row.silhouette = s.mean;
      row.silhouette_subsampled = s.subsampled;
      sc = s.mean;
      row.davies_bouldin = davies_bouldin(run.transformed.values, run.labels, combos[i].distance);
    } else {
      row.note = "single cluster: silhouette undefined, scored as 0";
    }
    auto score = acquires(run.labels, dataset.size(), options.optimal_cluster_count, sc, options.weights);
    row.acquires = score.total;
    result.report.push_back(row);

    bool better = !best;
    if (best) {
      const auto& cur = result.report[*best];
      if (row.acquires != cur.acquires)
        better = row.acquires > cur.acquires;
      else if (row.outliers != cur.outliers)
        better = row.outliers < cur.outliers;
      else
        better = row.config.min_points < cur.config.min_points;
    }
    if (better) {
      best = i;
      best_run = std::move(run);
    }
  }
  if (!best) throw Error(ErrorCode::kNoViableConfig, "no grid combination produced a clustering");

  result.best_index = *best;
  result.best = combos[*best];
  result.profiles = build_profiles(dataset, best_run->labels, result.best, best_run->spec, options.now);
  const auto& row = result.report[*best];
  result.profiles.quality =
      acquires(best_run->labels, dataset.size(), options.optimal_cluster_count, row.silhouette.value_or(0.0),
               options.weights);
  return result;
}

std::string grid_report_csv(const std::vector<GridRow>& rows) {
  auto opt = [](const std::optional<double>& v) {
    if (!v) return std::string();
    if (std::isinf(*v)) return std::string("inf");
    return format_double(*v);
  };
  std::string out =
      "index,algorithm,transform,distance,min_points,eps,valid,clusters,outliers,mean_cluster_size,silhouette,"
      "silhouette_subsampled,davies_bouldin,acquires,note\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += std::to_string(i) + "," + std::string(to_string(r.config.algorithm)) + "," +
           std::string(to_string(r.config.transform)) + "," + std::string(to_string(r.config.distance)) + "," +
           std::to_string(r.config.min_points) + "," + format_double(r.config.eps) + "," + (r.valid ? "1" : "0") +
           "," + std::to_string(r.clusters) + "," + std::to_string(r.outliers) + "," +
           format_double(r.mean_cluster_size) + "," + opt(r.silhouette) + "," + (r.silhouette_subsampled ? "1" : "0") +
           "," + opt(r.davies_bouldin) + "," + (r.valid ? format_double(r.acquires) : "") + ",";
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    std::replace(note.begin(), note.end(), '\n', ' ');
    out += note + "\n";
  }
  return out;
}

}  // namespace wlprof
