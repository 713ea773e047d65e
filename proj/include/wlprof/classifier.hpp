#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wlprof/profiles.hpp"
#include "wlprof/trace.hpp"

namespace wlprof {

// One-hot vocabulary over the metadata schema. Values unseen at training
// time encode to an all-zero block for their feature.
class EncoderVocabulary {
 public:
  struct Feature {
    std::string name;
    std::vector<std::string> values;  // ascending
    std::size_t offset = 0;
    std::optional<QuartileEdges> quartile_edges;
  };

  EncoderVocabulary() = default;
  EncoderVocabulary(std::vector<Feature> features);

  static EncoderVocabulary fit(const Dataset& dataset, std::span<const std::size_t> rows);

  const std::vector<Feature>& features() const noexcept { return features_; }
  std::size_t dimension() const noexcept { return dimension_; }
  static constexpr const char* kUnknownPolicy = "zero_block";

  // Sorted active column indices. Throws kSchema when a feature is missing.
  std::vector<std::uint32_t> encode(const MetadataMap& metadata) const;
  std::vector<std::uint32_t> encode(const Dataset& dataset, std::size_t row) const;
  std::string column_name(std::size_t column) const;

 private:
  std::optional<std::uint32_t> column_of(const Feature& f, const std::string& raw) const;

  std::vector<Feature> features_;
  std::size_t dimension_ = 0;
};

// Sparse binary design matrix: each row lists its active columns.
struct TrainingSet {
  std::vector<std::vector<std::uint32_t>> rows;
  std::vector<int> labels;
  std::vector<std::string> ids;
};

std::pair<TrainingSet, EncoderVocabulary> build_training_set(const Dataset& dataset, const ProfileSet& profiles);
// Labels aligned with the dataset; outliers (-1) are left out.
std::pair<TrainingSet, EncoderVocabulary> build_training_set(const Dataset& dataset, std::span<const int> labels);

TrainingSet encode_rows(const EncoderVocabulary& vocab, const Dataset& dataset, std::span<const std::size_t> rows,
                        std::span<const int> labels);

struct Hyperparams {
  std::size_t rounds = 100;
  double learning_rate = 0.3;
  std::size_t max_depth = 6;
  double min_child_weight = 1.0;
  double l2 = 1.0;

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves; otherwise split "column active"
  double value = 0.0;
  double gain = 0.0;
  std::size_t absent = 0;   // child index when the column is 0
  std::size_t present = 0;  // child index when the column is 1
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict(std::span<const std::uint32_t> active) const;
};

struct ClassifierModel {
  EncoderVocabulary vocabulary;
  Hyperparams hyperparams;
  std::vector<int> class_labels;  // ascending
  // trees[round * class_count + k] scores class k.
  std::vector<Tree> trees;
  std::uint64_t seed = 0;

  std::size_t class_count() const { return class_labels.size(); }
  std::string to_json_text() const;
  static ClassifierModel from_json_text(const std::string& text);
};

ClassifierModel train(const TrainingSet& ts, const EncoderVocabulary& vocab, const Hyperparams& hyperparams,
                      std::uint64_t seed);

struct Classification {
  int label = -1;
  std::vector<double> probabilities;  // aligned with model.class_labels
};

Classification classify(const ClassifierModel& model, const MetadataMap& metadata);
Classification classify_encoded(const ClassifierModel& model, std::span<const std::uint32_t> active);

struct FeatureImportance {
  std::string name;  // "feature=value"
  std::size_t column = 0;
  double gain_share = 0.0;
};

std::vector<FeatureImportance> feature_importance(const ClassifierModel& model, std::size_t top_n);

// Per-column contribution to the predicted class score: the change in node
// value along each tree path, credited to the split column.
struct Attribution {
  int label = -1;
  double bias = 0.0;
  std::map<std::string, double> contributions;
};
Attribution explain(const ClassifierModel& model, const MetadataMap& metadata);

// Seeded shuffle of 0..n-1 split into (train, validation).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_validation_split(std::size_t n,
                                                                                     double validation_fraction,
                                                                                     std::uint64_t seed);

}  // namespace wlprof
