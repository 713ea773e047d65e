#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "support/synthetic.hpp"
#include "wlprof/preprocess.hpp"

using namespace wlprof;

namespace {

FeatureMatrix column(std::vector<double> v) {
  std::vector<std::vector<double>> rows;
  for (double x : v) rows.push_back({x});
  FeatureMatrix m;
  m.values = Matrix::from_rows(rows);
  m.feature_names = {"x"};
  return m;
}

}  // namespace

TEST_CASE("standard scaling uses the population std") {
  auto [spec, out] = fit_transform(column({2, 4, 6}), TransformKind::kStandard);
  const double sd = std::sqrt(8.0 / 3.0);
  CHECK(out.values(0, 0) == doctest::Approx(-2.0 / sd).epsilon(1e-12));
  CHECK(out.values(1, 0) == doctest::Approx(0.0));
  CHECK(out.values(2, 0) == doctest::Approx(2.0 / sd).epsilon(1e-12));
  CHECK(out.values(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(out.transform_applied == TransformKind::kStandard);
}

TEST_CASE("degenerate ranges map to zero") {
  auto [mm, out] = fit_transform(column({5, 5, 5}), TransformKind::kMinMax);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.values(i, 0) == 0.0);
  auto [st, out2] = fit_transform(column({5, 5, 5}), TransformKind::kStandard);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out2.values(i, 0) == 0.0);
}

TEST_CASE("minmax and robust") {
  auto [mm, out] = fit_transform(column({1, 3, 5}), TransformKind::kMinMax);
  CHECK(out.values(1, 0) == doctest::Approx(0.5));
  auto [rb, out2] = fit_transform(column({1, 2, 3, 4, 5}), TransformKind::kRobust);
  // median 3, IQR 4 - 2 = 2
  CHECK(out2.values(4, 0) == doctest::Approx(1.0));
  auto [rb0, out3] = fit_transform(column({7, 7, 7, 7}), TransformKind::kRobust);
  CHECK(out3.values(0, 0) == 0.0);
}

TEST_CASE("Yeo-Johnson with lambda 1 is the identity on nonnegative data") {
  for (double x : {0.0, 0.5, 3.0, 1000.0}) CHECK(yeo_johnson(x, 1.0) == doctest::Approx(x));
  // lambda 0 branch: log1p
  CHECK(yeo_johnson(std::exp(1.0) - 1.0, 0.0) == doctest::Approx(1.0));
  // negative branch with lambda 2: -log1p(-x)
  CHECK(yeo_johnson(-(std::exp(1.0) - 1.0), 2.0) == doctest::Approx(-1.0));
}

TEST_CASE("power transform reduces skew of log-normal data") {
  Rng rng(4);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(std::exp(rng.normal()));
  auto [spec, out] = fit_transform(column(v), TransformKind::kPower);
  CHECK(skewness(v) > 2.0);
  CHECK(std::abs(skewness(out.values.column(0))) < 0.3);
  // the fitted lambda maximises the likelihood on a coarse grid too
  const double lam = spec.lambdas[0];
  for (double probe = -2.0; probe <= 2.0; probe += 0.25)
    CHECK(yeo_johnson_log_likelihood(v, lam) >= yeo_johnson_log_likelihood(v, probe) - 1e-9);
}

TEST_CASE("fitted spec re-applies and round-trips through JSON") {
  auto t = testing::make_trace({.n = 200, .seed = 9});
  auto raw = runtime_matrix(t.dataset);
  for (auto kind : {TransformKind::kStandard, TransformKind::kMinMax, TransformKind::kRobust, TransformKind::kPower}) {
    auto [spec, out] = fit_transform(raw, kind);
    auto again = TransformSpec::from_json_text(spec.to_json_text()).apply(raw);
    for (std::size_t i = 0; i < raw.values.rows(); ++i)
      for (std::size_t d = 0; d < raw.values.cols(); ++d) CHECK(again.values(i, d) == out.values(i, d));
    const auto row = spec.apply_row(raw.values.row(7));
    for (std::size_t d = 0; d < row.size(); ++d) CHECK(row[d] == out.values(7, d));
  }
}

TEST_CASE("Hopkins: clustered data low, uniform data mid-range") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    auto blobs = testing::gaussian_points({{0, 0}, {10, 0}, {5, 8}}, 167, 0.1, rng);
    CHECK(hopkins(testing::as_features(blobs), 0.1, seed).score < 0.15);
    auto uniform = testing::uniform_points(500, 2, rng);
    const double u = hopkins(testing::as_features(uniform), 0.1, seed).score;
    CHECK(u >= 0.3);
    CHECK(u <= 0.7);
  }
}

TEST_CASE("Hopkins does not depend on row order") {
  Rng rng(2);
  auto pts = testing::gaussian_points({{0, 0}, {4, 4}}, 60, 0.5, rng);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < pts.rows(); ++i) rows.emplace_back(pts.row(i).begin(), pts.row(i).end());
  const double a = hopkins(testing::as_features(Matrix::from_rows(rows)), 0.2, 11).score;
  std::reverse(rows.begin(), rows.end());
  const double b = hopkins(testing::as_features(Matrix::from_rows(rows)), 0.2, 11).score;
  CHECK(a == b);
}

TEST_CASE("Hopkins rejects degenerate input") {
  Rng rng(1);
  CHECK_THROWS_AS(hopkins(testing::as_features(testing::uniform_points(5, 2, rng)), 0.5, 1), Error);
  CHECK_THROWS_AS(hopkins(testing::as_features(Matrix(20, 2, 1.0)), 0.5, 1), Error);
}

TEST_CASE("strata allocation: exact proportions") {
  std::vector<std::size_t> sizes{900, 100};
  CHECK(allocate_strata(sizes, 10) == std::vector<std::size_t>{9, 1});
}

TEST_CASE("strata allocation reproduces the published workload sample") {
  // Workload strata sizes and sampled sizes for a 100 001-element sample.
  std::vector<std::size_t> sizes{10940142, 9128957, 4888371, 10781289, 13537, 60863, 849626, 11768, 15632};
  std::vector<std::size_t> expected{29818, 24881, 13323, 29385, 37, 166, 2316, 32, 43};
  const auto got = allocate_strata(sizes, 100001);
  REQUIRE(got.size() == expected.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] + 1 >= expected[i]);
    CHECK(got[i] <= expected[i] + 1);
    total += got[i];
  }
  CHECK(total == 100001);
}

TEST_CASE("stratified sample") {
  auto t = testing::make_trace({.n = 400, .seed = 5});
  auto same = stratified_sample(t.dataset, "workload_type", t.dataset.size(), 3);
  REQUIRE(same.size() == t.dataset.size());
  for (std::size_t i = 0; i < same.size(); ++i) CHECK(same[i].id == t.dataset[i].id);

  auto s = stratified_sample(t.dataset, "workload_type", 100, 3);
  CHECK(s.size() == 100);
  auto s2 = stratified_sample(t.dataset, "workload_type", 100, 3);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].id == s2[i].id);
  CHECK_THROWS_AS(stratified_sample(t.dataset, "nope", 10, 1), Error);
}

TEST_CASE("skewness") {
  CHECK(skewness(std::vector<double>{1, 2, 3}) == doctest::Approx(0.0));
  // m3 / m2^1.5 for [1,1,1,10]: m2 = 15.1875, m3 = 68.34375 -> 2/sqrt(3)
  CHECK(skewness(std::vector<double>{1, 1, 1, 10}) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(skewness(std::vector<double>{-1, -1, -1, -10}) == doctest::Approx(-2.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(skewness(std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(skewness(std::vector<double>{4, 4, 4}), Error);
}
