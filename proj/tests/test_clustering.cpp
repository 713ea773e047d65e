#include "doctest.h"

#include <algorithm>
#include <set>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "wlprof/clustering.hpp"

using namespace wlprof;

namespace {

std::vector<double> v(std::initializer_list<double> x) { return x; }

std::size_t cluster_count(const std::vector<int>& labels) {
  std::set<int> s;
  for (int l : labels)
    if (l >= 0) s.insert(l);
  return s.size();
}

std::size_t outliers(const std::vector<int>& labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
}

}  // namespace

TEST_CASE("distances") {
  CHECK(distance(v({0, 0}), v({3, 4}), DistanceKind::kEuclidean) == 5.0);
  CHECK(distance(v({1, 2}), v({4, 0}), DistanceKind::kManhattan) == 5.0);
  CHECK(distance(v({1, 0}), v({0, 1}), DistanceKind::kCosine) == doctest::Approx(1.0));
  CHECK(distance(v({1, 1}), v({2, 2}), DistanceKind::kCosine) == doctest::Approx(0.0));
  CHECK(distance(v({0, 0}), v({2, 2}), DistanceKind::kCosine) == 1.0);
  CHECK_THROWS_AS(distance(v({0}), v({1, 2}), DistanceKind::kEuclidean), Error);
}

TEST_CASE("similarity") {
  CHECK(similarity(v({1, 1}), v({1, 1}), DistanceKind::kEuclidean, 8.0) == 1.0);
  CHECK(similarity(v({0, 0}), v({0, 8}), DistanceKind::kEuclidean, 8.0) == 0.0);
  CHECK(similarity(v({0, 0}), v({0, 2}), DistanceKind::kEuclidean, 8.0) == doctest::Approx(0.75));
  CHECK_THROWS_AS(similarity(v({0, 0}), v({0, 9}), DistanceKind::kEuclidean, 8.0), Error);
}

TEST_CASE("DBSCAN: two separated blobs") {
  Rng rng(1);
  auto m = testing::gaussian_points({{0, 0}, {100, 100}}, 10, 0.1, rng);
  auto labels = dbscan(m, 1.0, 3, DistanceKind::kEuclidean);
  CHECK(cluster_count(labels) == 2);
  CHECK(outliers(labels) == 0);
}

TEST_CASE("DBSCAN: isolated point is an outlier") {
  Rng rng(2);
  auto blob = testing::gaussian_points({{0, 0}}, 10, 0.1, rng);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < blob.rows(); ++i) rows.emplace_back(blob.row(i).begin(), blob.row(i).end());
  rows.push_back({50, 50});
  auto labels = dbscan(Matrix::from_rows(rows), 1.0, 3, DistanceKind::kEuclidean);
  CHECK(labels.back() == -1);
  CHECK(cluster_count(labels) == 1);
}

TEST_CASE("DBSCAN: identical points form one cluster") {
  auto labels = dbscan(Matrix(12, 3, 2.5), 0.1, 12, DistanceKind::kEuclidean);
  CHECK(cluster_count(labels) == 1);
  CHECK(outliers(labels) == 0);
}

TEST_CASE("DBSCAN agrees with the brute-force oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    auto m = testing::uniform_points(60 + rng.index(60), 2 + rng.index(3), rng);
    const double eps = rng.uniform(0.1, 0.3);
    const std::size_t mp = 2 + rng.index(6);
    CHECK(testing::same_partition(dbscan(m, eps, mp, DistanceKind::kEuclidean), testing::dbscan_oracle(m, eps, mp)));
  }
}

TEST_CASE("DBSCAN partition is invariant to row order") {
  Rng rng(7);
  auto m = testing::uniform_points(80, 2, rng);
  auto a = dbscan(m, 0.15, 4, DistanceKind::kEuclidean);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = m.rows(); i-- > 0;) rows.emplace_back(m.row(i).begin(), m.row(i).end());
  auto b = dbscan(Matrix::from_rows(rows), 0.15, 4, DistanceKind::kEuclidean);
  std::reverse(b.begin(), b.end());
  CHECK(testing::same_partition(a, b));
}

TEST_CASE("HDBSCAN: two Gaussian blobs") {
  Rng rng(3);
  auto m = testing::gaussian_points({{0, 0}, {10, 0}}, 50, 0.05, rng);
  auto labels = hdbscan(m, 10, DistanceKind::kEuclidean);
  CHECK(cluster_count(labels) == 2);
  CHECK(outliers(labels) <= 5);
  CHECK(testing::same_partition(labels, testing::hdbscan_oracle(m, 10)));
}

TEST_CASE("HDBSCAN: uniform noise has no spurious structure") {
  Rng rng(4);
  auto m = testing::uniform_points(100, 2, rng);
  auto labels = hdbscan(m, 60, DistanceKind::kEuclidean);
  CHECK(cluster_count(labels) <= 1);
}

TEST_CASE("HDBSCAN: repeated point is one cluster") {
  auto labels = hdbscan(Matrix(20, 2, 3.0), 5, DistanceKind::kEuclidean);
  CHECK(cluster_count(labels) == 1);
  CHECK(outliers(labels) == 0);
}

TEST_CASE("HDBSCAN agrees with the level-set oracle on small inputs") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    Rng rng(seed);
    const std::size_t k = 1 + rng.index(3);
    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < k; ++c) centers.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
    auto m = testing::gaussian_points(centers, 40 / k + 5, 0.8, rng);
    const std::size_t mcs = 3 + rng.index(6);
    CHECK(testing::same_partition(hdbscan(m, mcs, DistanceKind::kEuclidean), testing::hdbscan_oracle(m, mcs)));
  }
}

TEST_CASE("HDBSCAN argument checks") {
  CHECK_THROWS_AS(hdbscan(Matrix(5, 2, 0.0), 1, DistanceKind::kEuclidean), Error);
  CHECK_THROWS_AS(hdbscan(Matrix(5, 2, 0.0), 6, DistanceKind::kEuclidean), Error);
}

TEST_CASE("canonical labels number clusters by first member") {
  std::vector<int> raw{5, -1, 2, 5, 2};
  CHECK(canonical_labels(raw) == std::vector<int>{0, -1, 1, 0, 1});
}
