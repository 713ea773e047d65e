#include "wlprof/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "wlprof/random.hpp"

namespace wlprof {

using nlohmann::json;

namespace {

constexpr double kMinSplitGain = 1e-6;
constexpr double kMinHessian = 1e-16;

void softmax(std::vector<double>& scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - top);
    sum += s;
  }
  for (double& s : scores) s /= sum;
}

}  // namespace

EncoderVocabulary::EncoderVocabulary(std::vector<Feature> features) : features_(std::move(features)) {
  dimension_ = 0;
  for (auto& f : features_) {
    f.offset = dimension_;
    dimension_ += f.values.size();
  }
}

EncoderVocabulary EncoderVocabulary::fit(const Dataset& dataset, std::span<const std::size_t> rows) {
  std::vector<Feature> features;
  for (std::size_t m = 0; m < dataset.schema_metadata().size(); ++m) {
    std::set<std::string> values;
    for (std::size_t r : rows) values.insert(dataset[r].metadata[m]);
    Feature f;
    f.name = dataset.schema_metadata()[m];
    f.values.assign(values.begin(), values.end());
    auto edges = dataset.quartile_edges.find(f.name);
    if (edges != dataset.quartile_edges.end()) f.quartile_edges = edges->second;
    features.push_back(std::move(f));
  }
  return EncoderVocabulary(std::move(features));
}

std::optional<std::uint32_t> EncoderVocabulary::column_of(const Feature& f, const std::string& raw) const {
  std::string value = raw;
  if (f.quartile_edges) {
    if (auto numeric = parse_double(raw)) value = quartile_label(*f.quartile_edges, *numeric);
  }
  auto it = std::lower_bound(f.values.begin(), f.values.end(), value);
  if (it == f.values.end() || *it != value) return std::nullopt;
  return static_cast<std::uint32_t>(f.offset + static_cast<std::size_t>(it - f.values.begin()));
}

std::vector<std::uint32_t> EncoderVocabulary::encode(const MetadataMap& metadata) const {
  std::vector<std::uint32_t> out;
  for (const auto& f : features_) {
    auto it = metadata.find(f.name);
    if (it == metadata.end()) throw Error(ErrorCode::kSchema, "metadata is missing feature '" + f.name + "'");
    if (auto col = column_of(f, it->second)) out.push_back(*col);
  }
  return out;
}

std::vector<std::uint32_t> EncoderVocabulary::encode(const Dataset& dataset, std::size_t row) const {
  std::vector<std::uint32_t> out;
  for (const auto& f : features_) {
    auto idx = dataset.metadata_index(f.name);
    if (!idx) throw Error(ErrorCode::kSchema, "dataset is missing metadata feature '" + f.name + "'");
    if (auto col = column_of(f, dataset[row].metadata[*idx])) out.push_back(*col);
  }
  return out;
}

std::string EncoderVocabulary::column_name(std::size_t column) const {
  for (const auto& f : features_) {
    if (column >= f.offset && column < f.offset + f.values.size()) return f.name + "=" + f.values[column - f.offset];
  }
  throw Error(ErrorCode::kInvalidArgument, "encoded column out of range");
}

TrainingSet encode_rows(const EncoderVocabulary& vocab, const Dataset& dataset, std::span<const std::size_t> rows,
                        std::span<const int> labels) {
  TrainingSet ts;
  for (std::size_t r : rows) {
    ts.rows.push_back(vocab.encode(dataset, r));
    ts.labels.push_back(labels[r]);
    ts.ids.push_back(dataset[r].id);
  }
  return ts;
}

std::pair<TrainingSet, EncoderVocabulary> build_training_set(const Dataset& dataset, std::span<const int> labels) {
  if (labels.size() != dataset.size()) throw Error(ErrorCode::kInvalidArgument, "labels are not aligned with the dataset");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) rows.push_back(i);
  if (rows.empty()) throw Error(ErrorCode::kEmptyProfileSet, "every workload is an outlier");
  auto vocab = EncoderVocabulary::fit(dataset, rows);
  auto ts = encode_rows(vocab, dataset, rows, labels);
  return {std::move(ts), std::move(vocab)};
}

std::pair<TrainingSet, EncoderVocabulary> build_training_set(const Dataset& dataset, const ProfileSet& profiles) {
  if (profiles.groups.empty()) throw Error(ErrorCode::kEmptyProfileSet, "profile set has no groups");
  std::unordered_map<std::string, int> label_of;
  for (const auto& g : profiles.groups) {
    if (g.member_ids.size() != g.member_count)
      throw Error(ErrorCode::kInvalidArgument, "profile set was loaded without member ids");
    for (const auto& id : g.member_ids) label_of[id] = g.label;
  }
  std::vector<int> labels(dataset.size(), kOutlierLabel);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto it = label_of.find(dataset[i].id);
    if (it != label_of.end()) labels[i] = it->second;
  }
  return build_training_set(dataset, labels);
}

void Hyperparams::validate() const {
  if (rounds < 1) throw Error(ErrorCode::kInvalidArgument, "boosting needs at least one round");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  if (max_depth < 1) throw Error(ErrorCode::kInvalidArgument, "max depth must be at least 1");
  if (min_child_weight < 0.0 || l2 < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative regularisation");
}

double Tree::predict(std::span<const std::uint32_t> active) const {
  std::size_t node = 0;
  while (nodes[node].feature >= 0) {
    const auto col = static_cast<std::uint32_t>(nodes[node].feature);
    node = std::binary_search(active.begin(), active.end(), col) ? nodes[node].present : nodes[node].absent;
  }
  return nodes[node].value;
}

namespace {

// Rows with the same encoding are indistinguishable to every tree, so the
// booster works on distinct encodings with per-class counts.
struct Pattern {
  std::vector<std::uint32_t> active;
  std::vector<double> class_counts;
  double count = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<Pattern>& patterns, std::span<const double> grad, std::span<const double> hess,
              const Hyperparams& hp, std::size_t dimension)
      : patterns_(patterns), grad_(grad), hess_(hess), hp_(hp), g_col_(dimension, 0.0), h_col_(dimension, 0.0) {}

  Tree build() {
    Tree tree;
    std::vector<std::size_t> all(patterns_.size());
    std::iota(all.begin(), all.end(), 0);
    grow(tree, all, 0);
    return tree;
  }

 private:
  std::size_t grow(Tree& tree, const std::vector<std::size_t>& members, std::size_t depth) {
    double g = 0.0, h = 0.0;
    for (std::size_t p : members) {
      g += grad_[p];
      h += hess_[p];
    }
    const std::size_t index = tree.nodes.size();
    tree.nodes.push_back({});
    tree.nodes[index].value = -g / (h + hp_.l2) * hp_.learning_rate;
    if (depth >= hp_.max_depth) return index;

    std::vector<std::uint32_t> touched;
    for (std::size_t p : members) {
      for (std::uint32_t c : patterns_[p].active) {
        if (g_col_[c] == 0.0 && h_col_[c] == 0.0) touched.push_back(c);
        g_col_[c] += grad_[p];
        h_col_[c] += hess_[p];
      }
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    const double parent_score = g * g / (h + hp_.l2);
    double best_gain = kMinSplitGain;
    int best_col = -1;
    for (std::uint32_t c : touched) {
      const double gr = g_col_[c], hr = h_col_[c];
      const double gl = g - gr, hl = h - hr;
      if (hl < hp_.min_child_weight || hr < hp_.min_child_weight) continue;
      const double gain = 0.5 * (gl * gl / (hl + hp_.l2) + gr * gr / (hr + hp_.l2) - parent_score);
      if (gain > best_gain) {
        best_gain = gain;
        best_col = static_cast<int>(c);
      }
    }
    for (std::uint32_t c : touched) g_col_[c] = h_col_[c] = 0.0;
    if (best_col < 0) return index;

    std::vector<std::size_t> absent, present;
    const auto col = static_cast<std::uint32_t>(best_col);
    for (std::size_t p : members) {
      const auto& a = patterns_[p].active;
      (std::binary_search(a.begin(), a.end(), col) ? present : absent).push_back(p);
    }
    tree.nodes[index].feature = best_col;
    tree.nodes[index].gain = best_gain;
    const std::size_t left = grow(tree, absent, depth + 1);
    const std::size_t right = grow(tree, present, depth + 1);
    tree.nodes[index].absent = left;
    tree.nodes[index].present = right;
    return index;
  }

  const std::vector<Pattern>& patterns_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const Hyperparams& hp_;
  std::vector<double> g_col_;
  std::vector<double> h_col_;
};

}  // namespace

ClassifierModel train(const TrainingSet& ts, const EncoderVocabulary& vocab, const Hyperparams& hyperparams,
                      std::uint64_t seed) {
  hyperparams.validate();
  if (ts.rows.empty()) throw Error(ErrorCode::kTraining, "empty training set");
  if (ts.rows.size() != ts.labels.size()) throw Error(ErrorCode::kTraining, "training rows and labels differ in length");
  std::set<int> classes(ts.labels.begin(), ts.labels.end());
  if (classes.size() < 2) throw Error(ErrorCode::kTraining, "training needs at least two distinct labels");

  ClassifierModel model;
  model.vocabulary = vocab;
  model.hyperparams = hyperparams;
  model.class_labels.assign(classes.begin(), classes.end());
  model.seed = seed;
  const std::size_t k = model.class_labels.size();
  std::map<int, std::size_t> class_index;
  for (std::size_t c = 0; c < k; ++c) class_index[model.class_labels[c]] = c;

  std::map<std::vector<std::uint32_t>, std::size_t> pattern_of;
  std::vector<Pattern> patterns;
  for (std::size_t i = 0; i < ts.rows.size(); ++i) {
    auto active = ts.rows[i];
    std::sort(active.begin(), active.end());
    for (std::uint32_t c : active)
      if (c >= vocab.dimension()) throw Error(ErrorCode::kTraining, "encoded column outside the vocabulary");
    pattern_of.try_emplace(active, 0);
  }
  for (auto& [active, idx] : pattern_of) {
    idx = patterns.size();
    patterns.push_back({active, std::vector<double>(k, 0.0), 0.0});
  }
  for (std::size_t i = 0; i < ts.rows.size(); ++i) {
    auto active = ts.rows[i];
    std::sort(active.begin(), active.end());
    auto& p = patterns[pattern_of[active]];
    p.class_counts[class_index[ts.labels[i]]] += 1.0;
    p.count += 1.0;
  }

  const std::size_t np = patterns.size();
  std::vector<std::vector<double>> scores(np, std::vector<double>(k, 0.0));
  std::vector<double> grad(np), hess(np);
  for (std::size_t round = 0; round < hyperparams.rounds; ++round) {
    std::vector<std::vector<double>> probs = scores;
    for (auto& p : probs) softmax(p);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t p = 0; p < np; ++p) {
        const double pr = probs[p][c];
        grad[p] = patterns[p].count * pr - patterns[p].class_counts[c];
        hess[p] = patterns[p].count * std::max(2.0 * pr * (1.0 - pr), kMinHessian);
      }
      TreeBuilder builder(patterns, grad, hess, hyperparams, vocab.dimension());
      model.trees.push_back(builder.build());
    }
    for (std::size_t p = 0; p < np; ++p)
      for (std::size_t c = 0; c < k; ++c) scores[p][c] += model.trees[round * k + c].predict(patterns[p].active);
  }
  return model;
}

Classification classify_encoded(const ClassifierModel& model, std::span<const std::uint32_t> active) {
  const std::size_t k = model.class_count();
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "classifier has no classes");
  std::vector<double> scores(k, 0.0);
  for (std::size_t t = 0; t < model.trees.size(); ++t) scores[t % k] += model.trees[t].predict(active);
  softmax(scores);
  Classification out;
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c)
    if (scores[c] > scores[best]) best = c;
  out.label = model.class_labels[best];
  out.probabilities = std::move(scores);
  return out;
}

Classification classify(const ClassifierModel& model, const MetadataMap& metadata) {
  const auto active = model.vocabulary.encode(metadata);
  return classify_encoded(model, active);
}

std::vector<FeatureImportance> feature_importance(const ClassifierModel& model, std::size_t top_n) {
  std::map<std::size_t, double> gain;
  double total = 0.0;
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.feature < 0) continue;
      gain[static_cast<std::size_t>(node.feature)] += node.gain;
      total += node.gain;
    }
  }
  std::vector<FeatureImportance> out;
  if (total <= 0.0) return out;
  for (const auto& [col, g] : gain) out.push_back({model.vocabulary.column_name(col), col, g / total});
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) { return a.gain_share > b.gain_share; });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

Attribution explain(const ClassifierModel& model, const MetadataMap& metadata) {
  const auto active = model.vocabulary.encode(metadata);
  const auto cls = classify_encoded(model, active);
  Attribution out;
  out.label = cls.label;
  const std::size_t k = model.class_count();
  const auto target = static_cast<std::size_t>(
      std::find(model.class_labels.begin(), model.class_labels.end(), cls.label) - model.class_labels.begin());
  for (std::size_t t = target; t < model.trees.size(); t += k) {
    const auto& nodes = model.trees[t].nodes;
    std::size_t node = 0;
    out.bias += nodes[0].value;
    while (nodes[node].feature >= 0) {
      const auto col = static_cast<std::uint32_t>(nodes[node].feature);
      const std::size_t next =
          std::binary_search(active.begin(), active.end(), col) ? nodes[node].present : nodes[node].absent;
      out.contributions[model.vocabulary.column_name(col)] += nodes[next].value - nodes[node].value;
      node = next;
    }
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_validation_split(std::size_t n,
                                                                                     double validation_fraction,
                                                                                     std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "validation fraction must be in [0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n_val = static_cast<std::size_t>(std::round(validation_fraction * static_cast<double>(n)));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {tr, val};
}

namespace {

json node_to_json(const ClassifierModel& model, const Tree& tree, std::size_t index) {
  const auto& n = tree.nodes[index];
  json j;
  if (n.feature < 0) {
    j["leaf"] = n.value;
    return j;
  }
  j["split"] = n.feature;
  j["split_name"] = model.vocabulary.column_name(static_cast<std::size_t>(n.feature));
  j["gain"] = n.gain;
  j["value"] = n.value;
  j["no"] = node_to_json(model, tree, n.absent);
  j["yes"] = node_to_json(model, tree, n.present);
  return j;
}

std::size_t node_from_json(Tree& tree, const json& j, std::size_t dimension) {
  const std::size_t index = tree.nodes.size();
  tree.nodes.push_back({});
  if (j.contains("leaf")) {
    tree.nodes[index].value = j["leaf"].get<double>();
    return index;
  }
  const int feature = j.at("split").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= dimension)
    throw Error(ErrorCode::kFormat, "tree split feature outside the encoded dimension");
  tree.nodes[index].feature = feature;
  tree.nodes[index].gain = j.at("gain").get<double>();
  tree.nodes[index].value = j.at("value").get<double>();
  const std::size_t no = node_from_json(tree, j.at("no"), dimension);
  const std::size_t yes = node_from_json(tree, j.at("yes"), dimension);
  tree.nodes[index].absent = no;
  tree.nodes[index].present = yes;
  return index;
}

}  // namespace

std::string ClassifierModel::to_json_text() const {
  json doc;
  doc["format"] = "wlprof-model";
  doc["version"] = 1;
  json feats = json::array();
  for (const auto& f : vocabulary.features()) {
    json fj;
    fj["name"] = f.name;
    fj["values"] = f.values;
    if (f.quartile_edges) fj["quartile_edges"] = *f.quartile_edges;
    feats.push_back(fj);
  }
  doc["vocabulary"] = {{"features", feats},
                       {"dimension", vocabulary.dimension()},
                       {"unknown_policy", EncoderVocabulary::kUnknownPolicy}};
  doc["hyperparams"] = {{"rounds", hyperparams.rounds},
                        {"learning_rate", hyperparams.learning_rate},
                        {"max_depth", hyperparams.max_depth},
                        {"min_child_weight", hyperparams.min_child_weight},
                        {"l2", hyperparams.l2}};
  doc["class_labels"] = class_labels;
  doc["seed"] = seed;
  json trees_json = json::array();
  const std::size_t k = class_count();
  for (std::size_t t = 0; t < trees.size(); ++t)
    trees_json.push_back({{"round", t / k}, {"class", class_labels[t % k]}, {"root", node_to_json(*this, trees[t], 0)}});
  doc["trees"] = trees_json;
  return doc.dump(1) + "\n";
}

ClassifierModel ClassifierModel::from_json_text(const std::string& text) {
  try {
    auto doc = json::parse(text);
    if (doc.value("format", "") != "wlprof-model") throw Error(ErrorCode::kFormat, "not a classifier model document");
    if (doc.at("version").get<int>() != 1) throw Error(ErrorCode::kFormat, "unsupported model version");
    ClassifierModel model;
    std::vector<EncoderVocabulary::Feature> feats;
    for (const auto& fj : doc.at("vocabulary").at("features")) {
      EncoderVocabulary::Feature f;
      f.name = fj.at("name").get<std::string>();
      f.values = fj.at("values").get<std::vector<std::string>>();
      if (!std::is_sorted(f.values.begin(), f.values.end()))
        throw Error(ErrorCode::kFormat, "vocabulary values must be sorted");
      if (fj.contains("quartile_edges")) f.quartile_edges = fj["quartile_edges"].get<QuartileEdges>();
      feats.push_back(std::move(f));
    }
    model.vocabulary = EncoderVocabulary(std::move(feats));
    if (doc["vocabulary"].at("dimension").get<std::size_t>() != model.vocabulary.dimension())
      throw Error(ErrorCode::kFormat, "vocabulary dimension mismatch");
    const auto& hp = doc.at("hyperparams");
    model.hyperparams.rounds = hp.at("rounds").get<std::size_t>();
    model.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    model.hyperparams.max_depth = hp.at("max_depth").get<std::size_t>();
    model.hyperparams.min_child_weight = hp.at("min_child_weight").get<double>();
    model.hyperparams.l2 = hp.at("l2").get<double>();
    model.class_labels = doc.at("class_labels").get<std::vector<int>>();
    if (model.class_labels.empty() || !std::is_sorted(model.class_labels.begin(), model.class_labels.end()))
      throw Error(ErrorCode::kFormat, "class labels must be nonempty and ascending");
    model.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& tj : doc.at("trees")) {
      Tree tree;
      node_from_json(tree, tj.at("root"), model.vocabulary.dimension());
      model.trees.push_back(std::move(tree));
    }
    if (model.trees.size() % model.class_count() != 0)
      throw Error(ErrorCode::kFormat, "tree count is not a multiple of the class count");
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed classifier model: ") + e.what());
  }
}

}  // namespace wlprof
