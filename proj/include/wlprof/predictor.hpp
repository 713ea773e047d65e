#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wlprof/classifier.hpp"
#include "wlprof/profiles.hpp"

namespace wlprof {

enum class PolicyKind { kFixedQuantile, kSkewConditional };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view text);

struct PredictionPolicy {
  PolicyKind kind = PolicyKind::kSkewConditional;
  double quantile = 0.05;
  double skew_threshold = 1.0;

  void validate() const;
};

struct BehaviorPrediction {
  std::string workload_id;
  int profile_label = -1;
  std::map<std::string, double> values;  // native units
  PredictionPolicy policy;
};

// fixed_quantile: the configured quantile of every feature.
// skew_conditional: that quantile when the feature's skewness exceeds the
// threshold, the median otherwise.
BehaviorPrediction predict(const ProfileGroup& profile, const std::vector<std::string>& features,
                           const PredictionPolicy& policy);

inline constexpr double kRelativeErrorFloor = 1e-9;

struct RmseResult {
  std::map<std::string, double> per_feature;  // percent
  double combined = 0.0;                      // root mean square of per_feature
};

// e_f = 100 |pred - actual| / max(|reference_f|, 1e-9), combined as the
// root mean square over features. `reference` defaults to `actual`.
RmseResult rmse_perc(const std::map<std::string, double>& predicted, const std::map<std::string, double>& actual,
                     const std::map<std::string, double>* reference = nullptr);

enum class RmseNormalization { kActual, kProfileMean };

struct EvaluationOptions {
  std::vector<std::string> features;  // empty: every runtime feature
  RmseNormalization normalization = RmseNormalization::kActual;
};

struct WorkloadError {
  std::string id;
  int profile_label = -1;
  std::map<std::string, double> per_feature;
  double combined = 0.0;
};

struct Spread {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

Spread spread_of(std::vector<double> values);

struct RmseReport {
  std::vector<WorkloadError> workloads;
  std::map<int, Spread> per_profile;
  std::map<std::string, Spread> per_feature;
  Spread overall;
  double fraction_below_50 = 0.0;
  std::size_t evaluated = 0;
  std::vector<std::string> excluded_ids;  // classified into a label with no profile
  RmseNormalization normalization = RmseNormalization::kActual;
  PredictionPolicy policy;

  std::string to_json_text() const;
  // Rows (workload, profile, feature, error); feature "combined" carries the
  // aggregate.
  std::string ecdf_csv() const;
  // Rows (profile, feature, count, min, q1, median, q3, max).
  std::string boxplot_csv() const;
};

RmseReport evaluate_holdout(const Dataset& dataset, const ClassifierModel& model, const ProfileSet& profiles,
                            const PredictionPolicy& policy, const EvaluationOptions& options = {});

}  // namespace wlprof
