#include "wlprof/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "wlprof/preprocess.hpp"

namespace wlprof {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, what + " is not valid JSON: " + e.what());
  }
}

void expect_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw Error(ErrorCode::kSchema, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(ErrorCode::kSchema, "unknown key '" + key + "' in " + where);
  }
}

// A number, or one of the strings "inf", "+inf", "-inf".
double real(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw Error(ErrorCode::kSchema, what + " must be a number");
}

std::size_t count(const json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
    throw Error(ErrorCode::kSchema, what + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

GridSpec parse_grid(const json& j, const std::string& where) {
  expect_keys(j, where, {"algorithms", "transforms", "distances", "min_points", "eps"});
  GridSpec g;
  if (j.contains("algorithms")) {
    g.algorithms.clear();
    for (const auto& a : j["algorithms"]) g.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
  }
  if (j.contains("transforms")) {
    g.transforms.clear();
    for (const auto& t : j["transforms"]) g.transforms.push_back(transform_kind_from_string(t.get<std::string>()));
  }
  if (j.contains("distances")) {
    g.distances.clear();
    for (const auto& d : j["distances"]) g.distances.push_back(distance_kind_from_string(d.get<std::string>()));
  }
  if (j.contains("min_points")) {
    g.min_points.clear();
    for (const auto& m : j["min_points"]) g.min_points.push_back(count(m, where + ".min_points"));
  }
  if (j.contains("eps")) {
    g.eps.clear();
    for (const auto& e : j["eps"]) g.eps.push_back(real(e, where + ".eps"));
  }
  return g;
}

DeltaThreshold parse_delta(const json& j, const std::string& where) {
  DeltaThreshold d;
  if (j.is_number() || j.is_string()) {
    d.value = real(j, where);
    return d;
  }
  expect_keys(j, where, {"value", "mode"});
  d.value = real(j.at("value"), where + ".value");
  const auto mode = j.value("mode", std::string("absolute"));
  if (mode == "absolute")
    d.mode = DeltaMode::kAbsolute;
  else if (mode == "relative")
    d.mode = DeltaMode::kRelative;
  else
    throw Error(ErrorCode::kSchema, where + ".mode must be 'absolute' or 'relative'");
  return d;
}

FeedbackConfig parse_feedback(const json& j) {
  expect_keys(j, "feedback", {"delta", "default_delta", "tau_v", "tau_o", "tau_f", "lambda", "window", "tau_quality",
                              "cooldown_events"});
  FeedbackConfig f;
  if (j.contains("delta")) {
    expect_keys(j["delta"], "feedback.delta", {});
    for (const auto& [name, d] : j["delta"].items()) f.delta[name] = parse_delta(d, "feedback.delta." + name);
  }
  if (j.contains("default_delta")) f.default_delta = parse_delta(j["default_delta"], "feedback.default_delta");
  if (j.contains("tau_v")) f.tau_v = real(j["tau_v"], "feedback.tau_v");
  if (j.contains("tau_o")) f.tau_o = real(j["tau_o"], "feedback.tau_o");
  if (j.contains("tau_f")) f.tau_f = real(j["tau_f"], "feedback.tau_f");
  if (j.contains("lambda")) f.lambda = real(j["lambda"], "feedback.lambda");
  if (j.contains("tau_quality")) f.tau_quality = real(j["tau_quality"], "feedback.tau_quality");
  if (j.contains("cooldown_events")) f.cooldown_events = count(j["cooldown_events"], "feedback.cooldown_events");
  if (j.contains("window")) {
    const auto& w = j["window"];
    expect_keys(w, "feedback.window", {"mode", "size", "min_events"});
    const auto mode = w.value("mode", std::string("count"));
    if (mode == "count")
      f.window.mode = WindowMode::kCount;
    else if (mode == "time")
      f.window.mode = WindowMode::kTime;
    else
      throw Error(ErrorCode::kSchema, "feedback.window.mode must be 'count' or 'time'");
    if (w.contains("size")) f.window.size = static_cast<std::int64_t>(count(w["size"], "feedback.window.size"));
    if (w.contains("min_events")) f.window.min_events = count(w["min_events"], "feedback.window.min_events");
  }
  return f;
}

json config_json(const ClusteringConfig& c) {
  return {{"algorithm", std::string(to_string(c.algorithm))},
          {"transform", std::string(to_string(c.transform))},
          {"distance", std::string(to_string(c.distance))},
          {"min_points", c.min_points},
          {"eps", c.eps},
          {"seed", c.seed}};
}

json metrics_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

json paths_json(const std::vector<fs::path>& paths) {
  json out = json::array();
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

Timestamp latest(const Dataset& d) {
  Timestamp t = 0;
  for (const auto& w : d.workloads()) t = std::max(t, w.submitted_at);
  return t;
}

std::map<std::string, QuartileEdges> edges_of(const ClassifierModel& model) {
  std::map<std::string, QuartileEdges> out;
  for (const auto& f : model.vocabulary.features())
    if (f.quartile_edges) out[f.name] = *f.quartile_edges;
  return out;
}

// Lines after the header that hold anything at all.
std::size_t data_line_count(const fs::path& csv) {
  std::istringstream in(read_file(csv));
  std::string line;
  std::size_t n = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty()) ++n;
  }
  return n;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text, const fs::path& base_dir) {
  const json doc = parse_json(text, "config");
  expect_keys(doc, "config",
              {"trace", "descriptor", "output_dir", "seed", "grid", "optimal_cluster_count", "acquires_weights",
               "silhouette_cap", "classifier", "validation_fraction", "prediction", "feedback", "regen", "hopkins",
               "include_member_ids"});
  RunConfig c;
  if (doc.contains("trace")) c.trace = resolve(base_dir, doc["trace"].get<std::string>());
  if (doc.contains("descriptor")) c.descriptor = resolve(base_dir, doc["descriptor"].get<std::string>());
  if (!doc.contains("output_dir")) throw Error(ErrorCode::kSchema, "config requires an output_dir");
  c.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
  if (!doc.contains("seed")) throw Error(ErrorCode::kSchema, "config requires a seed");
  if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0))
    throw Error(ErrorCode::kSchema, "seed must be a nonnegative integer");
  c.seed = doc["seed"].get<std::uint64_t>();

  if (doc.contains("grid")) c.grid = parse_grid(doc["grid"], "grid");
  if (doc.contains("optimal_cluster_count"))
    c.optimal_cluster_count = count(doc["optimal_cluster_count"], "optimal_cluster_count");
  if (doc.contains("acquires_weights")) {
    const auto& w = doc["acquires_weights"];
    expect_keys(w, "acquires_weights", {"clusters", "outliers", "silhouette"});
    c.acquires_weights.clusters = real(w.at("clusters"), "acquires_weights.clusters");
    c.acquires_weights.outliers = real(w.at("outliers"), "acquires_weights.outliers");
    c.acquires_weights.silhouette = real(w.at("silhouette"), "acquires_weights.silhouette");
  }
  if (doc.contains("silhouette_cap")) c.silhouette_cap = count(doc["silhouette_cap"], "silhouette_cap");
  if (doc.contains("classifier")) {
    const auto& h = doc["classifier"];
    expect_keys(h, "classifier", {"rounds", "learning_rate", "max_depth", "min_child_weight", "l2"});
    if (h.contains("rounds")) c.classifier.rounds = count(h["rounds"], "classifier.rounds");
    if (h.contains("learning_rate")) c.classifier.learning_rate = real(h["learning_rate"], "classifier.learning_rate");
    if (h.contains("max_depth")) c.classifier.max_depth = count(h["max_depth"], "classifier.max_depth");
    if (h.contains("min_child_weight"))
      c.classifier.min_child_weight = real(h["min_child_weight"], "classifier.min_child_weight");
    if (h.contains("l2")) c.classifier.l2 = real(h["l2"], "classifier.l2");
  }
  if (doc.contains("validation_fraction"))
    c.validation_fraction = real(doc["validation_fraction"], "validation_fraction");
  if (doc.contains("prediction")) {
    const auto& p = doc["prediction"];
    expect_keys(p, "prediction", {"policy", "quantile", "skew_threshold", "normalization", "features"});
    if (p.contains("policy")) c.prediction.kind = policy_kind_from_string(p["policy"].get<std::string>());
    if (p.contains("quantile")) c.prediction.quantile = real(p["quantile"], "prediction.quantile");
    if (p.contains("skew_threshold")) c.prediction.skew_threshold = real(p["skew_threshold"], "prediction.skew_threshold");
    if (p.contains("normalization")) {
      const auto n = p["normalization"].get<std::string>();
      if (n == "actual")
        c.normalization = RmseNormalization::kActual;
      else if (n == "profile_mean")
        c.normalization = RmseNormalization::kProfileMean;
      else
        throw Error(ErrorCode::kSchema, "prediction.normalization must be 'actual' or 'profile_mean'");
    }
    if (p.contains("features")) c.features = p["features"].get<std::vector<std::string>>();
  }
  if (doc.contains("feedback")) c.feedback = parse_feedback(doc["feedback"]);
  c.regen_grid = c.grid;
  c.regen_optimal_cluster_count = c.optimal_cluster_count;
  if (doc.contains("regen")) {
    const auto& r = doc["regen"];
    expect_keys(r, "regen", {"grid", "optimal_cluster_count"});
    if (r.contains("grid")) c.regen_grid = parse_grid(r["grid"], "regen.grid");
    if (r.contains("optimal_cluster_count"))
      c.regen_optimal_cluster_count = count(r["optimal_cluster_count"], "regen.optimal_cluster_count");
  }
  if (doc.contains("hopkins")) {
    expect_keys(doc["hopkins"], "hopkins", {"fraction"});
    if (doc["hopkins"].contains("fraction")) c.hopkins_fraction = real(doc["hopkins"]["fraction"], "hopkins.fraction");
  }
  if (doc.contains("include_member_ids")) c.include_member_ids = doc["include_member_ids"].get<bool>();
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path, const std::string& overrides_json) {
  json doc = parse_json(read_file(path), "config " + path.string());
  bool output_overridden = false;
  if (!overrides_json.empty()) {
    json over = parse_json(overrides_json, "config overrides");
    if (!over.is_object()) throw Error(ErrorCode::kSchema, "config overrides must be a JSON object");
    for (const char* key : {"trace", "descriptor", "output_dir"}) {
      if (over.contains(key) && over[key].is_string())
        over[key] = fs::absolute(over[key].get<std::string>()).lexically_normal().string();
    }
    output_overridden = over.contains("output_dir");
    doc.merge_patch(over);
  }
  if (const char* env = std::getenv(kOutputDirEnv); env && *env && !output_overridden)
    doc["output_dir"] = fs::absolute(env).lexically_normal().string();
  fs::path base = fs::absolute(path).parent_path();
  try {
    return from_json_text(doc.dump(), base);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("config has a value of the wrong type: ") + e.what());
  }
}

void RunConfig::validate() const {
  if (!trace.empty() && !fs::exists(trace)) throw Error(ErrorCode::kIo, "trace not found: " + trace.string());
  if (!descriptor.empty() && !fs::exists(descriptor))
    throw Error(ErrorCode::kIo, "descriptor not found: " + descriptor.string());
  if (optimal_cluster_count < 1 || regen_optimal_cluster_count < 1)
    throw Error(ErrorCode::kInvalidArgument, "optimal cluster count must be at least 1");
  acquires_weights.validate();
  classifier.validate();
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "validation_fraction must be inside [0, 1)");
  prediction.validate();
  feedback.validate();
  if (!(hopkins_fraction > 0.0 && hopkins_fraction <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "hopkins.fraction must be inside (0, 1]");
}

IngestDescriptor RunConfig::load_descriptor() const {
  if (descriptor.empty()) throw Error(ErrorCode::kSchema, "config has no descriptor");
  return IngestDescriptor::load(descriptor);
}

ProfileSet load_profiles(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingArtifact, "missing artifact " + path.string());
  return ProfileSet::from_json_text(read_file(path));
}

ClassifierModel load_model(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMissingArtifact, "missing artifact " + path.string());
  return ClassifierModel::from_json_text(read_file(path));
}

BuildSummary cmd_build(const RunConfig& config) {
  config.validate();
  if (config.trace.empty()) throw Error(ErrorCode::kSchema, "config has no trace");
  const auto loaded = load_trace(config.trace, config.load_descriptor());
  const Dataset& data = loaded.dataset;

  BuildSummary summary;
  summary.rows = data.size();
  summary.dropped = loaded.dropped;

  json hopkins_doc = {{"fraction", config.hopkins_fraction}, {"seed", config.seed}};
  try {
    const auto h = hopkins(runtime_matrix(data), config.hopkins_fraction, config.seed);
    summary.hopkins = h.score;
    hopkins_doc["score"] = h.score;
    hopkins_doc["sample_size"] = h.sample_size;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInvalidArgument && e.code() != ErrorCode::kNumericDomain) throw;
    hopkins_doc["score"] = nullptr;
    hopkins_doc["note"] = e.what();
  }

  GridOptions options;
  options.optimal_cluster_count = config.optimal_cluster_count;
  options.weights = config.acquires_weights;
  options.silhouette_cap = config.silhouette_cap;
  options.seed = config.seed;
  options.now = latest(data);
  auto grid = grid_search(data, config.grid, options);
  const ProfileSet& profiles = grid.profiles;

  auto [ts, vocab] = build_training_set(data, profiles);
  auto [train_rows, valid_rows] = train_validation_split(ts.rows.size(), config.validation_fraction, config.seed);
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(valid_rows.begin(), valid_rows.end());
  TrainingSet train_set;
  for (std::size_t r : train_rows) {
    train_set.rows.push_back(ts.rows[r]);
    train_set.labels.push_back(ts.labels[r]);
    train_set.ids.push_back(ts.ids[r]);
  }
  const auto model = train(train_set, vocab, config.classifier, config.seed);

  json classifier_doc = {{"encoded_dimension", vocab.dimension()},
                         {"classes", model.class_labels},
                         {"train_rows", train_rows.size()},
                         {"validation_rows", valid_rows.size()},
                         {"unknown_category_policy", EncoderVocabulary::kUnknownPolicy}};
  if (!valid_rows.empty()) {
    std::vector<int> predicted, actual;
    for (std::size_t r : valid_rows) {
      predicted.push_back(classify_encoded(model, ts.rows[r]).label);
      actual.push_back(ts.labels[r]);
    }
    const auto report = class_report(predicted, actual);
    summary.validation_accuracy = report.accuracy;
    json per_class = json::object();
    for (const auto& [label, m] : report.per_class) per_class[std::to_string(label)] = metrics_json(m);
    classifier_doc["validation"] = {{"accuracy", report.accuracy},
                                    {"correct", report.correct},
                                    {"total", report.total},
                                    {"macro", metrics_json(report.macro)},
                                    {"weighted", metrics_json(report.weighted)},
                                    {"per_class", per_class}};
  } else {
    classifier_doc["validation"] = nullptr;
  }
  json importance = json::array();
  for (const auto& fi : feature_importance(model, 20))
    importance.push_back({{"feature", fi.name}, {"gain_share", fi.gain_share}});
  classifier_doc["feature_importance"] = importance;

  summary.best = grid.best;
  summary.acquires = profiles.quality ? profiles.quality->total : 0.0;
  summary.profiles = profiles.groups.size();
  summary.outliers = profiles.outlier_count;

  std::size_t valid_combinations = 0;
  for (const auto& row : grid.report) valid_combinations += row.valid ? 1 : 0;
  json drop_reasons = json::object();
  for (const auto& [reason, n] : loaded.drop_reasons) drop_reasons[reason] = n;

  json report;
  report["format"] = "wlprof-build-report";
  report["version"] = 1;
  report["seed"] = config.seed;
  report["trace"] = {{"rows", data.size()}, {"dropped", loaded.dropped}, {"drop_reasons", drop_reasons}};
  report["hopkins"] = hopkins_doc;
  report["grid"] = {{"combinations", grid.report.size()}, {"valid", valid_combinations}};
  json best = {{"index", grid.best_index}, {"config", config_json(grid.best)}};
  if (profiles.quality) {
    const auto& q = *profiles.quality;
    best["acquires"] = {{"total", q.total},
                        {"cluster_count_score", q.cluster_count_score},
                        {"outliers_score", q.outliers_score},
                        {"silhouette_score_mean", q.silhouette_score_mean},
                        {"optimal_cluster_count", config.optimal_cluster_count}};
  }
  report["best"] = best;
  report["profiles"] = {{"count", profiles.groups.size()},
                        {"outliers", profiles.outlier_count},
                        {"distance_threshold", profiles.distance_threshold}};
  report["classifier"] = classifier_doc;

  fs::create_directories(config.output_dir);
  const auto out = [&](const char* name) { return config.output_dir / name; };
  write_file_atomic(out(kProfilesFile), profiles.to_json_text(config.include_member_ids));
  write_file_atomic(out(kModelFile), model.to_json_text());
  write_file_atomic(out(kGridFile), grid_report_csv(grid.report));
  write_file_atomic(out(kBuildReportFile), report.dump(1) + "\n");
  summary.artifacts = {out(kProfilesFile), out(kModelFile), out(kGridFile), out(kBuildReportFile)};
  return summary;
}

EvaluateSummary cmd_evaluate(const RunConfig& config, const fs::path& holdout,
                             const std::optional<fs::path>& descriptor) {
  const auto profiles = load_profiles(config.output_dir / kProfilesFile);
  const auto model = load_model(config.output_dir / kModelFile);
  if (data_line_count(holdout) == 0) throw Error(ErrorCode::kEmptyHoldout, "holdout trace has no rows");
  const auto desc = descriptor ? IngestDescriptor::load(*descriptor) : config.load_descriptor();
  const auto edges = edges_of(model);
  const auto loaded = load_trace(holdout, desc, &edges);

  EvaluationOptions options;
  options.features = config.features;
  options.normalization = config.normalization;
  const auto report = evaluate_holdout(loaded.dataset, model, profiles, config.prediction, options);

  fs::create_directories(config.output_dir);
  const auto out = [&](const char* name) { return config.output_dir / name; };
  write_file_atomic(out(kRmseReportFile), report.to_json_text());
  write_file_atomic(out(kRmseEcdfFile), report.ecdf_csv());
  write_file_atomic(out(kRmseBoxplotFile), report.boxplot_csv());

  EvaluateSummary s;
  s.evaluated = report.evaluated;
  s.excluded = report.excluded_ids.size();
  s.fraction_below_50 = report.fraction_below_50;
  s.artifacts = {out(kRmseReportFile), out(kRmseEcdfFile), out(kRmseBoxplotFile)};
  return s;
}

FeedbackSummary cmd_feedback(const RunConfig& config, const fs::path& stream,
                             const std::optional<fs::path>& descriptor) {
  auto profiles = load_profiles(config.output_dir / kProfilesFile);
  auto model = load_model(config.output_dir / kModelFile);
  if (config.trace.empty()) throw Error(ErrorCode::kSchema, "config has no training trace");
  const auto train_desc = config.load_descriptor();
  const auto stream_desc = descriptor ? IngestDescriptor::load(*descriptor) : train_desc;
  const auto edges = edges_of(model);
  const auto training = load_trace(config.trace, train_desc, &edges).dataset;
  if (data_line_count(stream) == 0) throw Error(ErrorCode::kInvalidArgument, "feedback stream has no rows");
  const auto events = load_trace(stream, stream_desc, &edges).dataset;

  RegenConfig regen;
  regen.grid = config.regen_grid;
  regen.options.optimal_cluster_count = config.regen_optimal_cluster_count;
  regen.options.weights = config.acquires_weights;
  regen.options.silhouette_cap = config.silhouette_cap;
  regen.options.seed = config.seed;
  regen.hyperparams = config.classifier;

  FeedbackInputs in{training, events, std::move(model), std::move(profiles), config.feedback, regen,
                    config.prediction, config.features};
  const auto report = run_feedback(in);

  fs::create_directories(config.output_dir);
  const auto out = [&](const char* name) { return config.output_dir / name; };
  write_file_atomic(out(kFeedbackReportFile), report.to_json_text());
  write_file_atomic(out(kFeedbackTimelineFile), report.timeline_csv());
  FeedbackSummary s;
  s.artifacts = {out(kFeedbackReportFile), out(kFeedbackTimelineFile)};
  if (report.adopted_updates > 0) {
    write_file_atomic(out(kFeedbackProfilesFile), report.final_profiles.to_json_text(config.include_member_ids));
    write_file_atomic(out(kFeedbackModelFile), report.final_model.to_json_text());
    s.artifacts.push_back(out(kFeedbackProfilesFile));
    s.artifacts.push_back(out(kFeedbackModelFile));
  }
  s.events = report.events;
  s.violations = report.violations;
  s.triggers = report.triggers.size();
  s.adopted = report.adopted_updates;
  s.rejected = report.rejected_updates;
  return s;
}

std::string classify_line(const ClassifierModel& model, const ProfileSet* profiles, const PredictionPolicy& policy,
                          const std::string& line, std::size_t line_number) {
  json out;
  out["line"] = line_number;
  json in;
  try {
    in = json::parse(line);
  } catch (const json::exception&) {
    out["error"] = "line is not valid JSON";
    out["code"] = error_code_name(ErrorCode::kFormat);
    return out.dump();
  }
  if (!in.is_object()) {
    out["error"] = "line is not a JSON object";
    out["code"] = error_code_name(ErrorCode::kFormat);
    return out.dump();
  }
  if (in.contains("id")) out["id"] = in["id"];

  const json* fields = &in;
  if (in.contains("metadata") && in["metadata"].is_object()) fields = &in["metadata"];
  MetadataMap metadata;
  for (const auto& [key, value] : fields->items()) {
    if (fields == &in && key == "id") continue;
    if (value.is_string())
      metadata[key] = value.get<std::string>();
    else if (value.is_number())
      metadata[key] = format_double(value.get<double>());
    else if (value.is_boolean())
      metadata[key] = value.get<bool>() ? "true" : "false";
  }
  for (const auto& f : model.vocabulary.features()) {
    if (!metadata.count(f.name)) {
      out["error"] = "missing metadata field '" + f.name + "'";
      out["code"] = error_code_name(ErrorCode::kSchema);
      out["field"] = f.name;
      return out.dump();
    }
  }
  try {
    const auto cls = classify(model, metadata);
    out.erase("line");
    out["label"] = cls.label;
    json probs = json::object();
    for (std::size_t k = 0; k < model.class_labels.size(); ++k)
      probs[std::to_string(model.class_labels[k])] = cls.probabilities[k];
    out["probs"] = probs;
    if (profiles) {
      if (const ProfileGroup* g = profiles->find(cls.label)) {
        out["behavior"] = predict(*g, profiles->runtime_features, policy).values;
      } else {
        out["behavior"] = nullptr;
      }
    }
  } catch (const Error& e) {
    out["error"] = e.what();
    out["code"] = error_code_name(e.code());
  }
  return out.dump();
}

std::string BuildSummary::to_json_text() const {
  json j = {{"rows", rows},
            {"dropped", dropped},
            {"hopkins", hopkins ? json(*hopkins) : json(nullptr)},
            {"best", config_json(best)},
            {"acquires", acquires},
            {"profiles", profiles},
            {"outliers", outliers},
            {"validation_accuracy", validation_accuracy},
            {"artifacts", paths_json(artifacts)}};
  return j.dump();
}

std::string EvaluateSummary::to_json_text() const {
  json j = {{"evaluated", evaluated},
            {"excluded", excluded},
            {"fraction_below_50", fraction_below_50},
            {"artifacts", paths_json(artifacts)}};
  return j.dump();
}

std::string FeedbackSummary::to_json_text() const {
  json j = {{"events", events},       {"violations", violations}, {"triggers", triggers},
            {"adopted", adopted},     {"rejected", rejected},     {"artifacts", paths_json(artifacts)}};
  return j.dump();
}

}  // namespace wlprof
