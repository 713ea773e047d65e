#include "wlprof/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "wlprof/stats.hpp"

namespace wlprof {

using nlohmann::json;

std::string_view to_string(PolicyKind kind) {
  return kind == PolicyKind::kFixedQuantile ? "fixed_quantile" : "skew_conditional";
}

PolicyKind policy_kind_from_string(std::string_view text) {
  if (text == "fixed_quantile") return PolicyKind::kFixedQuantile;
  if (text == "skew_conditional") return PolicyKind::kSkewConditional;
  throw Error(ErrorCode::kInvalidArgument, "unknown prediction policy '" + std::string(text) + "'");
}

void PredictionPolicy::validate() const {
  if (!(quantile > 0.0 && quantile < 1.0)) throw Error(ErrorCode::kInvalidArgument, "policy quantile must be inside (0, 1)");
  if (std::isnan(skew_threshold)) throw Error(ErrorCode::kInvalidArgument, "skew threshold is NaN");
}

BehaviorPrediction predict(const ProfileGroup& profile, const std::vector<std::string>& features,
                           const PredictionPolicy& policy) {
  policy.validate();
  BehaviorPrediction out;
  out.profile_label = profile.label;
  out.policy = policy;
  for (const auto& name : features) {
    auto it = profile.stats.find(name);
    if (it == profile.stats.end()) throw Error(ErrorCode::kInvalidArgument, "profile has no statistics for '" + name + "'");
    const auto& s = it->second;
    const bool use_quantile = policy.kind == PolicyKind::kFixedQuantile || s.skewness > policy.skew_threshold;
    out.values[name] = use_quantile ? s.quantile(policy.quantile) : s.median;
  }
  return out;
}

RmseResult rmse_perc(const std::map<std::string, double>& predicted, const std::map<std::string, double>& actual,
                     const std::map<std::string, double>* reference) {
  if (predicted.size() != actual.size()) throw Error(ErrorCode::kInvalidArgument, "predicted and actual feature sets differ");
  if (predicted.empty()) throw Error(ErrorCode::kInvalidArgument, "no features to score");
  RmseResult out;
  double sum_sq = 0.0;
  for (const auto& [name, pred] : predicted) {
    auto it = actual.find(name);
    if (it == actual.end()) throw Error(ErrorCode::kInvalidArgument, "predicted and actual feature sets differ");
    if (!std::isfinite(it->second)) throw Error(ErrorCode::kInvalidArgument, "actual value for '" + name + "' is not finite");
    double ref = it->second;
    if (reference) {
      auto r = reference->find(name);
      if (r == reference->end()) throw Error(ErrorCode::kInvalidArgument, "no reference value for '" + name + "'");
      ref = r->second;
    }
    const double e = 100.0 * std::abs(pred - it->second) / std::max(std::abs(ref), kRelativeErrorFloor);
    out.per_feature[name] = e;
    sum_sq += e * e;
  }
  out.combined = std::sqrt(sum_sq / static_cast<double>(predicted.size()));
  return out;
}

Spread spread_of(std::vector<double> values) {
  Spread s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  return s;
}

RmseReport evaluate_holdout(const Dataset& dataset, const ClassifierModel& model, const ProfileSet& profiles,
                            const PredictionPolicy& policy, const EvaluationOptions& options) {
  if (dataset.size() == 0) throw Error(ErrorCode::kEmptyHoldout, "holdout set is empty");
  policy.validate();
  std::vector<std::string> features = options.features.empty() ? dataset.schema_runtime() : options.features;
  std::vector<std::size_t> columns;
  for (const auto& f : features) {
    auto idx = dataset.runtime_index(f);
    if (!idx) throw Error(ErrorCode::kSchema, "holdout has no runtime feature '" + f + "'");
    columns.push_back(*idx);
  }

  RmseReport report;
  report.normalization = options.normalization;
  report.policy = policy;
  std::map<int, std::vector<double>> by_profile;
  std::map<std::string, std::vector<double>> by_feature;
  std::vector<double> combined;
  std::size_t below = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& w = dataset[i];
    const auto cls = classify_encoded(model, model.vocabulary.encode(dataset, i));
    const ProfileGroup* group = profiles.find(cls.label);
    if (!group) {
      report.excluded_ids.push_back(w.id);
      continue;
    }
    auto pred = predict(*group, features, policy);
    std::map<std::string, double> actual, reference;
    for (std::size_t f = 0; f < features.size(); ++f) {
      actual[features[f]] = w.runtime[columns[f]];
      reference[features[f]] = group->stats.at(features[f]).mean;
    }
    auto err = rmse_perc(pred.values, actual,
                         options.normalization == RmseNormalization::kProfileMean ? &reference : nullptr);
    WorkloadError we{w.id, cls.label, err.per_feature, err.combined};
    by_profile[cls.label].push_back(err.combined);
    for (const auto& [name, e] : err.per_feature) by_feature[name].push_back(e);
    combined.push_back(err.combined);
    if (err.combined < 50.0) ++below;
    report.workloads.push_back(std::move(we));
  }
  report.evaluated = report.workloads.size();
  for (auto& [label, v] : by_profile) report.per_profile[label] = spread_of(std::move(v));
  for (auto& [name, v] : by_feature) report.per_feature[name] = spread_of(std::move(v));
  report.overall = spread_of(combined);
  report.fraction_below_50 =
      report.evaluated == 0 ? 0.0 : static_cast<double>(below) / static_cast<double>(report.evaluated);
  return report;
}

namespace {

json spread_json(const Spread& s) {
  return {{"count", s.count}, {"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
}

std::string spread_row(const Spread& s) {
  return std::to_string(s.count) + "," + format_double(s.min) + "," + format_double(s.q1) + "," +
         format_double(s.median) + "," + format_double(s.q3) + "," + format_double(s.max);
}

}  // namespace

std::string RmseReport::to_json_text() const {
  json doc;
  doc["format"] = "wlprof-rmse-report";
  doc["version"] = 1;
  doc["policy"] = {{"kind", std::string(to_string(policy.kind))},
                   {"quantile", policy.quantile},
                   {"skew_threshold", std::isfinite(policy.skew_threshold) ? json(policy.skew_threshold)
                                                                           : json(policy.skew_threshold > 0 ? "inf" : "-inf")}};
  doc["normalization"] = normalization == RmseNormalization::kActual ? "actual" : "profile_mean";
  doc["evaluated"] = evaluated;
  doc["excluded_ids"] = excluded_ids;
  doc["fraction_below_50"] = fraction_below_50;
  doc["overall"] = spread_json(overall);
  json pp = json::object();
  for (const auto& [label, s] : per_profile) pp[std::to_string(label)] = spread_json(s);
  doc["per_profile"] = pp;
  json pf = json::object();
  for (const auto& [name, s] : per_feature) pf[name] = spread_json(s);
  doc["per_feature"] = pf;
  json ws = json::array();
  for (const auto& w : workloads)
    ws.push_back({{"id", w.id}, {"profile", w.profile_label}, {"per_feature", w.per_feature}, {"combined", w.combined}});
  doc["workloads"] = ws;
  return doc.dump(1) + "\n";
}

std::string RmseReport::ecdf_csv() const {
  std::string out = "workload,profile,feature,error\n";
  for (const auto& w : workloads) {
    for (const auto& [name, e] : w.per_feature)
      out += w.id + "," + std::to_string(w.profile_label) + "," + name + "," + format_double(e) + "\n";
    out += w.id + "," + std::to_string(w.profile_label) + ",combined," + format_double(w.combined) + "\n";
  }
  return out;
}

std::string RmseReport::boxplot_csv() const {
  std::map<std::pair<int, std::string>, std::vector<double>> cells;
  for (const auto& w : workloads) {
    for (const auto& [name, e] : w.per_feature) cells[{w.profile_label, name}].push_back(e);
    cells[{w.profile_label, "combined"}].push_back(w.combined);
  }
  std::string out = "profile,feature,count,min,q1,median,q3,max\n";
  for (auto& [key, values] : cells)
    out += std::to_string(key.first) + "," + key.second + "," + spread_row(spread_of(std::move(values))) + "\n";
  return out;
}

}  // namespace wlprof
