#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wlprof/classifier.hpp"
#include "wlprof/feedback.hpp"
#include "wlprof/predictor.hpp"
#include "wlprof/profiles.hpp"

namespace wlprof {

inline constexpr const char* kOutputDirEnv = "WLPROF_OUTPUT_DIR";

// Artifact file names inside the output directory.
inline constexpr const char* kProfilesFile = "profiles.json";
inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kGridFile = "gridsearch.csv";
inline constexpr const char* kBuildReportFile = "build-report.json";
inline constexpr const char* kRmseReportFile = "rmse-report.json";
inline constexpr const char* kRmseEcdfFile = "rmse-ecdf.csv";
inline constexpr const char* kRmseBoxplotFile = "rmse-boxplot.csv";
inline constexpr const char* kFeedbackReportFile = "feedback-report.json";
inline constexpr const char* kFeedbackTimelineFile = "feedback-timeline.csv";
inline constexpr const char* kFeedbackProfilesFile = "profiles.feedback.json";
inline constexpr const char* kFeedbackModelFile = "model.feedback.json";

struct RunConfig {
  std::filesystem::path trace;
  std::filesystem::path descriptor;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  GridSpec grid;
  std::size_t optimal_cluster_count = 1;
  AcquiresWeights acquires_weights;
  std::size_t silhouette_cap = kDefaultSilhouetteCap;
  Hyperparams classifier;
  double validation_fraction = 0.2;

  PredictionPolicy prediction;
  RmseNormalization normalization = RmseNormalization::kActual;
  std::vector<std::string> features;  // empty: every runtime feature

  FeedbackConfig feedback;
  GridSpec regen_grid;
  std::size_t regen_optimal_cluster_count = 1;

  double hopkins_fraction = kDefaultHopkinsFraction;
  bool include_member_ids = false;

  // Paths in `text` resolve against `base_dir`. Unknown keys are rejected.
  static RunConfig from_json_text(const std::string& text, const std::filesystem::path& base_dir);
  // Reads the config file, merges `overrides_json` (a JSON object whose path
  // values resolve against the current directory), then applies the output
  // directory environment override.
  static RunConfig load(const std::filesystem::path& path, const std::string& overrides_json = {});

  void validate() const;
  IngestDescriptor load_descriptor() const;
};

struct BuildSummary {
  std::size_t rows = 0;
  std::size_t dropped = 0;
  std::optional<double> hopkins;
  ClusteringConfig best;
  double acquires = 0.0;
  std::size_t profiles = 0;
  std::size_t outliers = 0;
  double validation_accuracy = 0.0;
  std::vector<std::filesystem::path> artifacts;

  std::string to_json_text() const;
};

struct EvaluateSummary {
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  double fraction_below_50 = 0.0;
  std::vector<std::filesystem::path> artifacts;

  std::string to_json_text() const;
};

struct FeedbackSummary {
  std::size_t events = 0;
  std::size_t violations = 0;
  std::size_t triggers = 0;
  std::size_t adopted = 0;
  std::size_t rejected = 0;
  std::vector<std::filesystem::path> artifacts;

  std::string to_json_text() const;
};

BuildSummary cmd_build(const RunConfig& config);
// `descriptor` defaults to the config's descriptor.
EvaluateSummary cmd_evaluate(const RunConfig& config, const std::filesystem::path& holdout,
                             const std::optional<std::filesystem::path>& descriptor = std::nullopt);
FeedbackSummary cmd_feedback(const RunConfig& config, const std::filesystem::path& stream,
                             const std::optional<std::filesystem::path>& descriptor = std::nullopt);

// One classify input line -> one JSON output line (no trailing newline).
// Input: {"id": ..., "metadata": {...}} or a flat object of metadata fields.
// Malformed input yields {"line", "error", "code"[, "field"]}.
std::string classify_line(const ClassifierModel& model, const ProfileSet* profiles, const PredictionPolicy& policy,
                          const std::string& line, std::size_t line_number);

ProfileSet load_profiles(const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace wlprof
