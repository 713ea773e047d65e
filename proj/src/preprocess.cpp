#include "wlprof/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "json.hpp"
#include "wlprof/random.hpp"
#include "wlprof/stats.hpp"

namespace wlprof {

namespace {

constexpr double kLambdaLo = -5.0;
constexpr double kLambdaHi = 5.0;

void require_nonempty(const FeatureMatrix& m) {
  if (m.values.rows() == 0 || m.values.cols() == 0)
    throw Error(ErrorCode::kInvalidArgument, "transform requires a nonempty matrix");
}

double standardize(double x, double center, double scale) { return scale == 0.0 ? 0.0 : (x - center) / scale; }

}  // namespace

double yeo_johnson(double x, double lambda) {
  constexpr double tiny = 1e-12;
  if (x >= 0.0) {
    if (std::abs(lambda) < tiny) return std::log1p(x);
    return (std::pow(x + 1.0, lambda) - 1.0) / lambda;
  }
  if (std::abs(lambda - 2.0) < tiny) return -std::log1p(-x);
  return -(std::pow(1.0 - x, 2.0 - lambda) - 1.0) / (2.0 - lambda);
}

double yeo_johnson_log_likelihood(std::span<const double> column, double lambda) {
  const auto n = static_cast<double>(column.size());
  std::vector<double> t(column.size());
  double jacobian = 0.0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    t[i] = yeo_johnson(column[i], lambda);
    jacobian += std::copysign(std::log1p(std::abs(column[i])), column[i]);
  }
  const double mu = mean(t);
  double var = 0.0;
  for (double v : t) var += (v - mu) * (v - mu);
  var /= n;
  if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
  return -0.5 * n * std::log(var) + (lambda - 1.0) * jacobian;
}

double fit_yeo_johnson_lambda(std::span<const double> column) {
  const double first = column.empty() ? 0.0 : column.front();
  if (std::all_of(column.begin(), column.end(), [&](double v) { return v == first; })) return 1.0;

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kLambdaLo, b = kLambdaHi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = yeo_johnson_log_likelihood(column, c);
  double fd = yeo_johnson_log_likelihood(column, d);
  for (int iter = 0; iter < 80; ++iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = yeo_johnson_log_likelihood(column, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = yeo_johnson_log_likelihood(column, d);
    }
  }
  return 0.5 * (a + b);
}

TransformSpec fit(const FeatureMatrix& matrix, TransformKind kind) {
  require_nonempty(matrix);
  TransformSpec spec;
  spec.kind = kind;
  spec.fitted = true;
  spec.feature_names = matrix.feature_names;
  const std::size_t cols = matrix.values.cols();
  if (kind == TransformKind::kNone) return spec;

  spec.center.resize(cols);
  spec.scale.resize(cols);
  if (kind == TransformKind::kPower) spec.lambdas.resize(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    auto col = matrix.values.column(c);
    switch (kind) {
      case TransformKind::kStandard:
        spec.center[c] = mean(col);
        spec.scale[c] = stddev(col);
        break;
      case TransformKind::kMinMax: {
        auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        spec.center[c] = *lo;
        spec.scale[c] = *hi - *lo;
        break;
      }
      case TransformKind::kRobust: {
        std::sort(col.begin(), col.end());
        spec.center[c] = quantile_sorted(col, 0.5);
        const double iqr = quantile_sorted(col, 0.75) - quantile_sorted(col, 0.25);
        spec.scale[c] = iqr == 0.0 ? 1.0 : iqr;
        break;
      }
      case TransformKind::kPower: {
        const double lambda = fit_yeo_johnson_lambda(col);
        spec.lambdas[c] = lambda;
        for (double& v : col) v = yeo_johnson(v, lambda);
        spec.center[c] = mean(col);
        spec.scale[c] = stddev(col);
        break;
      }
      case TransformKind::kNone:
        break;
    }
  }
  return spec;
}

std::vector<double> TransformSpec::apply_row(std::span<const double> row) const {
  if (!fitted) throw Error(ErrorCode::kInvalidArgument, "transform applied before it was fitted");
  if (kind != TransformKind::kNone && row.size() != center.size())
    throw Error(ErrorCode::kInvalidArgument, "transform dimension does not match the input");
  std::vector<double> out(row.begin(), row.end());
  for (std::size_t c = 0; c < out.size() && kind != TransformKind::kNone; ++c) {
    double x = out[c];
    if (kind == TransformKind::kPower) x = yeo_johnson(x, lambdas[c]);
    out[c] = standardize(x, center[c], scale[c]);
  }
  return out;
}

FeatureMatrix TransformSpec::apply(const FeatureMatrix& matrix) const {
  if (!fitted) throw Error(ErrorCode::kInvalidArgument, "transform applied before it was fitted");
  if (!feature_names.empty() && matrix.values.cols() != feature_names.size())
    throw Error(ErrorCode::kInvalidArgument, "transform dimension does not match the matrix");
  FeatureMatrix out;
  out.feature_names = matrix.feature_names;
  out.transform_applied = kind;
  out.values = Matrix(matrix.values.rows(), matrix.values.cols());
  for (std::size_t r = 0; r < matrix.values.rows(); ++r) {
    auto row = apply_row(matrix.values.row(r));
    std::copy(row.begin(), row.end(), out.values.row(r).begin());
  }
  return out;
}

std::string TransformSpec::to_json_text() const {
  nlohmann::json doc;
  doc["kind"] = std::string(to_string(kind));
  doc["features"] = feature_names;
  doc["center"] = center;
  doc["scale"] = scale;
  doc["lambdas"] = lambdas;
  return doc.dump();
}

TransformSpec TransformSpec::from_json_text(const std::string& text) {
  try {
    auto doc = nlohmann::json::parse(text);
    TransformSpec spec;
    spec.kind = transform_kind_from_string(doc.at("kind").get<std::string>());
    spec.feature_names = doc.at("features").get<std::vector<std::string>>();
    spec.center = doc.at("center").get<std::vector<double>>();
    spec.scale = doc.at("scale").get<std::vector<double>>();
    spec.lambdas = doc.at("lambdas").get<std::vector<double>>();
    const std::size_t l = spec.feature_names.size();
    if (spec.kind != TransformKind::kNone &&
        (spec.center.size() != l || spec.scale.size() != l ||
         (spec.kind == TransformKind::kPower && spec.lambdas.size() != l)))
      throw Error(ErrorCode::kFormat, "transform parameters do not match the feature list");
    spec.fitted = true;
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed transform spec: ") + e.what());
  }
}

std::pair<TransformSpec, FeatureMatrix> fit_transform(const FeatureMatrix& matrix, TransformKind kind) {
  auto spec = fit(matrix, kind);
  auto out = spec.apply(matrix);
  return {std::move(spec), std::move(out)};
}

HopkinsResult hopkins(const FeatureMatrix& matrix, double sample_fraction, std::uint64_t seed) {
  const auto& x = matrix.values;
  const std::size_t n = x.rows();
  const std::size_t dims = x.cols();
  if (n < 10) throw Error(ErrorCode::kInvalidArgument, "Hopkins statistic needs at least 10 points");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "Hopkins sample fraction must be in (0, 1]");
  for (double v : x.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "Hopkins input contains non-finite values");

  std::vector<double> lo(dims), hi(dims);
  for (std::size_t c = 0; c < dims; ++c) {
    auto col = x.column(c);
    auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    lo[c] = *mn;
    hi[c] = *mx;
  }
  bool degenerate = true;
  for (std::size_t c = 0; c < dims; ++c) degenerate = degenerate && lo[c] == hi[c];
  if (degenerate) throw Error(ErrorCode::kNumericDomain, "Hopkins statistic undefined: all points identical");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = x.row(a), rb = x.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });

  std::size_t m = std::max<std::size_t>(kHopkinsMinProbes,
                                        static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(n))));
  m = std::min(m, n);

  auto sq_dist = [&](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t c = 0; c < dims; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return s;
  };

  Rng rng(seed);
  const auto picks = rng.sample_without_replacement(n, m);
  double sum_w = 0.0;
  for (std::size_t p : picks) {
    const std::size_t i = order[p];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) best = std::min(best, sq_dist(x.row(i), x.row(j)));
    sum_w += std::sqrt(best);
  }

  double sum_u = 0.0;
  std::vector<double> probe(dims);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t c = 0; c < dims; ++c) probe[c] = rng.uniform(lo[c], hi[c]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) best = std::min(best, sq_dist(probe, x.row(j)));
    sum_u += std::sqrt(best);
  }

  return {sum_w / (sum_u + sum_w), m, seed};
}

std::vector<std::size_t> allocate_strata(std::span<const std::size_t> sizes, std::size_t target) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (target > n) throw Error(ErrorCode::kInvalidArgument, "sample target exceeds the population");
  std::vector<std::size_t> alloc(sizes.size());
  std::vector<unsigned __int128> remainder(sizes.size());
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const unsigned __int128 num = static_cast<unsigned __int128>(target) * sizes[s];
    alloc[s] = static_cast<std::size_t>(num / n);
    remainder[s] = num % n;
    assigned += alloc[s];
  }
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < target; ++k, ++assigned) ++alloc[order[k]];

  const auto nonempty = static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }));
  if (target >= nonempty) {
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      if (sizes[s] == 0 || alloc[s] > 0) continue;
      auto donor = std::max_element(alloc.begin(), alloc.end()) - alloc.begin();
      --alloc[static_cast<std::size_t>(donor)];
      alloc[s] = 1;
    }
  }
  return alloc;
}

Dataset stratified_sample(const Dataset& dataset, const std::string& stratify_on, std::size_t target_size,
                          std::uint64_t seed) {
  auto feature = dataset.metadata_index(stratify_on);
  if (!feature) throw Error(ErrorCode::kInvalidArgument, "unknown metadata feature '" + stratify_on + "'");
  if (target_size < 1) throw Error(ErrorCode::kInvalidArgument, "sample target must be at least 1");
  if (target_size > dataset.size()) throw Error(ErrorCode::kInvalidArgument, "sample target exceeds the dataset size");

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < dataset.size(); ++i) strata[dataset[i].metadata[*feature]].push_back(i);
  std::vector<std::size_t> sizes;
  for (const auto& [key, rows] : strata) sizes.push_back(rows.size());
  const auto alloc = allocate_strata(sizes, target_size);

  Rng rng(seed);
  std::vector<std::size_t> picked;
  std::size_t s = 0;
  for (const auto& [key, rows] : strata) {
    for (std::size_t p : rng.sample_without_replacement(rows.size(), alloc[s])) picked.push_back(rows[p]);
    ++s;
  }
  std::sort(picked.begin(), picked.end());
  return dataset.subset(picked);
}

double skewness(std::span<const double> values) {
  if (values.size() < 3) throw Error(ErrorCode::kNumericDomain, "skewness needs at least three values");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); }))
    throw Error(ErrorCode::kNumericDomain, "skewness undefined for zero variance");
  const double mu = mean(values);
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mu;
    m2 += d * d;
    m3 += d * d * d;
  }
  const auto n = static_cast<double>(values.size());
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) throw Error(ErrorCode::kNumericDomain, "skewness undefined for zero variance");
  return m3 / std::pow(m2, 1.5);
}

}  // namespace wlprof
