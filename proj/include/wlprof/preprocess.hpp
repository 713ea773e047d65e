#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlprof/trace.hpp"

namespace wlprof {

// Per-feature parameters of a fitted transform. Which vectors are populated
// depends on `kind`:
//   standard: center = mean, scale = population std (0 -> output 0)
//   minmax:   center = min, scale = max - min (0 -> output 0)
//   robust:   center = median, scale = IQR (0 replaced by 1)
//   power:    lambdas = Yeo-Johnson exponents, then center/scale standardize
struct TransformSpec {
  TransformKind kind = TransformKind::kNone;
  bool fitted = false;
  std::vector<std::string> feature_names;
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<double> lambdas;

  FeatureMatrix apply(const FeatureMatrix& matrix) const;
  std::vector<double> apply_row(std::span<const double> row) const;

  std::string to_json_text() const;
  static TransformSpec from_json_text(const std::string& text);
};

TransformSpec fit(const FeatureMatrix& matrix, TransformKind kind);
std::pair<TransformSpec, FeatureMatrix> fit_transform(const FeatureMatrix& matrix, TransformKind kind);

double yeo_johnson(double x, double lambda);
// Log-likelihood of the Yeo-Johnson transformed column under a Gaussian.
double yeo_johnson_log_likelihood(std::span<const double> column, double lambda);
// Golden-section search over [-5, 5].
double fit_yeo_johnson_lambda(std::span<const double> column);

struct HopkinsResult {
  double score = 0.0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultHopkinsFraction = 0.1;
inline constexpr std::size_t kHopkinsMinProbes = 50;

// Sum(w) / (Sum(u) + Sum(w)), where w are nearest-neighbour distances from
// sampled data points to the rest of the data and u are nearest-neighbour
// distances from uniform probes in the bounding box. Near 0 means clustered,
// around 0.5 means uniformly random. Points are put in a canonical order
// before sampling, so the score does not depend on row order.
HopkinsResult hopkins(const FeatureMatrix& matrix, double sample_fraction, std::uint64_t seed);

Dataset stratified_sample(const Dataset& dataset, const std::string& stratify_on, std::size_t target_size,
                          std::uint64_t seed);

// Largest-remainder allocation of `target` over strata of the given sizes.
std::vector<std::size_t> allocate_strata(std::span<const std::size_t> sizes, std::size_t target);

// Biased Fisher-Pearson coefficient m3 / m2^(3/2). Throws kNumericDomain on
// fewer than three values or zero variance.
double skewness(std::span<const double> values);

}  // namespace wlprof
