#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "wlprof/classifier.hpp"

using namespace wlprof;

namespace {

// Two metadata columns: colour {red, green, blue} and size {S, L}.
Dataset colour_size(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::vector<Workload> ws;
  for (std::size_t i = 0; i < rows.size(); ++i)
    ws.push_back({"r" + std::to_string(i), {rows[i].first, rows[i].second}, {1.0}, static_cast<Timestamp>(i)});
  return Dataset({"colour", "size"}, {"cpu"}, std::move(ws));
}

// Labels are a bijection of one metadata value.
Dataset group_dataset(std::size_t n, std::size_t groups, std::uint64_t seed, std::vector<int>& labels) {
  Rng rng(seed);
  std::vector<Workload> ws;
  labels.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<int>(rng.index(groups));
    labels.push_back(g);
    ws.push_back({"w" + std::to_string(i), {"g" + std::to_string(g), "u" + std::to_string(rng.index(5))},
                  {1.0},
                  static_cast<Timestamp>(i)});
  }
  return Dataset({"group", "user"}, {"cpu"}, std::move(ws));
}

Hyperparams fast() {
  Hyperparams h;
  h.rounds = 20;
  return h;
}

}  // namespace

TEST_CASE("encoder: one-hot layout and unseen values") {
  auto ds = colour_size({{"red", "S"}, {"green", "L"}, {"blue", "S"}});
  std::vector<std::size_t> rows{0, 1, 2};
  auto vocab = EncoderVocabulary::fit(ds, rows);
  CHECK(vocab.dimension() == 5);
  CHECK(vocab.column_name(0) == "colour=blue");
  CHECK(vocab.column_name(2) == "colour=red");
  CHECK(vocab.column_name(3) == "size=L");
  CHECK(vocab.encode(ds, 0) == std::vector<std::uint32_t>{2, 4});
  CHECK(vocab.encode(MetadataMap{{"colour", "green"}, {"size", "L"}}) == std::vector<std::uint32_t>{1, 3});
  // Unseen colour: its block is all zero.
  CHECK(vocab.encode(MetadataMap{{"colour", "purple"}, {"size", "S"}}) == std::vector<std::uint32_t>{4});
  CHECK_THROWS_AS(vocab.column_name(5), Error);
  try {
    vocab.encode(MetadataMap{{"colour", "red"}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchema);
  }
}

TEST_CASE("encoder: quartile columns bucket raw numbers with the training edges") {
  EncoderVocabulary::Feature f;
  f.name = "cpu_request";
  f.values = {"Q1", "Q2", "Q3", "Q4"};
  f.quartile_edges = QuartileEdges{2, 4, 8};
  EncoderVocabulary vocab({f});
  CHECK(vocab.encode(MetadataMap{{"cpu_request", "1"}}) == std::vector<std::uint32_t>{0});
  CHECK(vocab.encode(MetadataMap{{"cpu_request", "100"}}) == std::vector<std::uint32_t>{3});
  CHECK(vocab.encode(MetadataMap{{"cpu_request", "Q2"}}) == std::vector<std::uint32_t>{1});
}

TEST_CASE("training set: outliers are left out") {
  auto ds = colour_size({{"red", "S"}, {"green", "L"}, {"blue", "S"}, {"red", "L"}});
  std::vector<int> labels{0, -1, 1, 0};
  auto [ts, vocab] = build_training_set(ds, labels);
  CHECK(ts.rows.size() == 3);
  CHECK(ts.ids == std::vector<std::string>{"r0", "r2", "r3"});
  CHECK(ts.labels == std::vector<int>{0, 1, 0});
  // Vocabulary is fitted on the retained rows only.
  CHECK(vocab.dimension() == 4);
  std::vector<int> none(4, -1);
  CHECK_THROWS_AS(build_training_set(ds, none), Error);
}

TEST_CASE("classifier: learns a bijective metadata mapping exactly") {
  std::vector<int> labels;
  auto ds = group_dataset(600, 5, 3, labels);
  auto [ts, vocab] = build_training_set(ds, labels);
  auto model = train(ts, vocab, fast(), 1);
  CHECK(model.class_labels == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(model.trees.size() == 20 * 5);
  std::vector<int> predicted;
  for (std::size_t i = 0; i < ds.size(); ++i) predicted.push_back(classify_encoded(model, ts.rows[i]).label);
  auto report = testing::class_oracle(predicted, labels);
  for (const auto& [c, m] : report) CHECK(m.f1 == 1.0);

  auto cls = classify(model, {{"group", "g3"}, {"user", "u9"}});
  CHECK(cls.label == 3);
  CHECK(cls.probabilities[3] > 0.99);
  double sum = 0;
  for (double p : cls.probabilities) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  auto ranking = feature_importance(model, 20);
  REQUIRE_FALSE(ranking.empty());
  double group_share = 0.0;
  for (const auto& fi : ranking)
    if (fi.name.rfind("group=", 0) == 0) group_share += fi.gain_share;
  CHECK(group_share >= 0.99);
  CHECK(feature_importance(model, 2).size() == 2);
}

TEST_CASE("classifier: a model without trees has an empty ranking and uniform output") {
  ClassifierModel model;
  model.class_labels = {0, 1};
  CHECK(feature_importance(model, 10).empty());
  auto cls = classify_encoded(model, {});
  CHECK(cls.label == 0);
  CHECK(cls.probabilities[0] == 0.5);
}

TEST_CASE("classifier: training is deterministic and the model round-trips") {
  std::vector<int> labels;
  auto ds = group_dataset(300, 3, 5, labels);
  auto [ts, vocab] = build_training_set(ds, labels);
  auto a = train(ts, vocab, fast(), 9);
  auto b = train(ts, vocab, fast(), 9);
  CHECK(a.to_json_text() == b.to_json_text());
  auto back = ClassifierModel::from_json_text(a.to_json_text());
  CHECK(back.to_json_text() == a.to_json_text());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = classify_encoded(a, ts.rows[i]);
    const auto y = classify_encoded(back, ts.rows[i]);
    CHECK(x.label == y.label);
    CHECK(x.probabilities == y.probabilities);
  }
}

TEST_CASE("classifier: malformed model JSON is a format error") {
  try {
    ClassifierModel::from_json_text("[1, 2]");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFormat);
  }
}

TEST_CASE("classifier: invalid training input") {
  auto ds = colour_size({{"red", "S"}, {"green", "L"}});
  std::vector<int> one{0, 0};
  auto [ts, vocab] = build_training_set(ds, one);
  try {
    train(ts, vocab, fast(), 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTraining);
  }
  Hyperparams bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("classifier: ambiguous patterns predict the majority label") {
  // Same metadata, labels 0:0:1 -> majority 0 with probability near 2/3.
  auto ds = colour_size({{"red", "S"}, {"red", "S"}, {"red", "S"}, {"blue", "L"}});
  std::vector<int> labels{0, 0, 1, 1};
  auto [ts, vocab] = build_training_set(ds, labels);
  Hyperparams h;
  h.rounds = 200;
  h.l2 = 0.0;
  h.min_child_weight = 0.0;
  auto model = train(ts, vocab, h, 1);
  auto cls = classify(model, {{"colour", "red"}, {"size", "S"}});
  CHECK(cls.label == 0);
  CHECK(cls.probabilities[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("classifier: attribution credits the deciding column") {
  std::vector<int> labels;
  auto ds = group_dataset(300, 3, 8, labels);
  auto [ts, vocab] = build_training_set(ds, labels);
  auto model = train(ts, vocab, fast(), 2);
  MetadataMap m{{"group", "g1"}, {"user", "u0"}};
  auto attr = explain(model, m);
  CHECK(attr.label == 1);
  std::string top;
  double best = -1e300;
  for (const auto& [name, v] : attr.contributions)
    if (v > best) best = v, top = name;
  CHECK(top.rfind("group=", 0) == 0);
}

TEST_CASE("train/validation split is a seeded partition") {
  auto [tr, val] = train_validation_split(100, 0.2, 4);
  CHECK(val.size() == 20);
  CHECK(tr.size() == 80);
  std::set<std::size_t> all(tr.begin(), tr.end());
  all.insert(val.begin(), val.end());
  CHECK(all.size() == 100);
  auto again = train_validation_split(100, 0.2, 4);
  CHECK(again.second == val);
  CHECK(train_validation_split(100, 0.2, 5).second != val);
  CHECK(train_validation_split(10, 0.0, 1).second.empty());
  CHECK_THROWS_AS(train_validation_split(10, 1.0, 1), Error);
}
