#include "doctest.h"

#include <cstdlib>

#include "json.hpp"
#include "support/workspace.hpp"
#include "wlprof/pipeline.hpp"

using namespace wlprof;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

testing::SyntheticTrace three_blobs(std::size_t n, std::uint64_t seed, const std::string& prefix = "w",
                                    std::int64_t start = 0) {
  return testing::make_trace({.n = n, .clusters = {0, 1, 2}, .seed = seed, .id_prefix = prefix, .start_time = start});
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

}  // namespace

TEST_CASE("config: parsing, defaults and relative paths") {
  testing::TempDir dir("cfg");
  auto trace = three_blobs(100, 1);
  auto path = testing::write_workspace(dir, trace, 7, 3, R"(, "hopkins": {"fraction": 0.2})");
  auto c = RunConfig::load(path);
  CHECK(c.seed == 7);
  CHECK(c.trace == dir / "train.csv");
  CHECK(c.output_dir == dir / "out");
  CHECK(c.grid.min_points == std::vector<std::size_t>{20, 40});
  CHECK(c.grid.algorithms == std::vector<Algorithm>{Algorithm::kHdbscan});
  CHECK(c.optimal_cluster_count == 3);
  CHECK(c.classifier.rounds == 20);
  CHECK(c.classifier.max_depth == Hyperparams{}.max_depth);
  CHECK(c.feedback.default_delta->mode == DeltaMode::kRelative);
  CHECK(c.feedback.window.size == 200);
  CHECK(c.regen_optimal_cluster_count == 4);
  CHECK(c.hopkins_fraction == 0.2);
}

TEST_CASE("config: strictness") {
  testing::TempDir dir("cfgbad");
  auto trace = three_blobs(50, 1);
  testing::write_workspace(dir, trace, 1, 3);
  auto parse = [&](const std::string& text) { return RunConfig::from_json_text(text, dir.path()); };
  CHECK(code_of([&] { parse(R"({"output_dir": "o"})"); }) == ErrorCode::kSchema);
  CHECK(code_of([&] { parse(R"({"seed": 1})"); }) == ErrorCode::kSchema);
  CHECK(code_of([&] { parse(R"({"seed": 1, "output_dir": "o", "colour": 2})"); }) == ErrorCode::kSchema);
  CHECK(code_of([&] { parse(R"({"seed": 1, "output_dir": "o", "grid": {"eps_list": []}})"); }) == ErrorCode::kSchema);
  CHECK(code_of([&] { parse(R"({"seed": -3, "output_dir": "o"})"); }) == ErrorCode::kSchema);
  CHECK(code_of([&] { parse("{not json"); }) == ErrorCode::kFormat);
  CHECK(code_of([&] { parse(R"({"seed": 1, "output_dir": "o", "trace": "nope.csv"})"); }) == ErrorCode::kIo);
  CHECK(code_of([&] { parse(R"({"seed": 1, "output_dir": "o", "feedback": {"tau_v": 2}})"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([&] {
          parse(R"({"seed": 1, "output_dir": "o", "acquires_weights": {"clusters": 0.5, "outliers": 0.5, "silhouette": 0.5}})");
        }) == ErrorCode::kInvalidArgument);
  auto inf = parse(R"({"seed": 1, "output_dir": "o", "feedback": {"tau_quality": "inf"}})");
  CHECK(std::isinf(inf.feedback.tau_quality));
}

TEST_CASE("config: overrides and the output directory environment variable") {
  testing::TempDir dir("cfgenv");
  auto trace = three_blobs(50, 1);
  auto path = testing::write_workspace(dir, trace, 1, 3);
  const auto env_dir = dir / "from-env";
  ::setenv(kOutputDirEnv, env_dir.c_str(), 1);
  auto c = RunConfig::load(path);
  CHECK(c.output_dir == env_dir);
  auto flag = RunConfig::load(path, json{{"output_dir", (dir / "from-flag").string()}, {"seed", 99}}.dump());
  CHECK(flag.output_dir == dir / "from-flag");
  CHECK(flag.seed == 99);
  ::unsetenv(kOutputDirEnv);
  CHECK(RunConfig::load(path).output_dir == dir / "out");
}

TEST_CASE("build, evaluate and feedback write their artifacts") {
  testing::TempDir dir("pipe");
  auto trace = three_blobs(400, 2);
  auto config = RunConfig::load(testing::write_workspace(dir, trace, 5, 3));

  auto built = cmd_build(config);
  CHECK(built.rows == 400);
  CHECK(built.profiles == 3);
  CHECK(built.hopkins.has_value());
  CHECK(*built.hopkins < 0.15);
  CHECK(built.validation_accuracy == 1.0);
  for (const char* name : {kProfilesFile, kModelFile, kGridFile, kBuildReportFile})
    CHECK(fs::exists(config.output_dir / name));
  auto report = json::parse(testing::read_text(config.output_dir / kBuildReportFile));
  CHECK(report["format"] == "wlprof-build-report");
  CHECK(report["classifier"]["validation"]["accuracy"] == 1.0);
  CHECK(report["grid"]["combinations"] == 2);

  auto holdout = three_blobs(120, 3, "h", 400);
  testing::write_text(dir / "holdout.csv", holdout.csv);
  auto eval = cmd_evaluate(config, dir / "holdout.csv");
  CHECK(eval.evaluated == 120);
  CHECK(eval.fraction_below_50 >= 0.9);
  CHECK(fs::exists(config.output_dir / kRmseEcdfFile));

  auto drift = testing::make_trace({.n = 300, .clusters = {5}, .seed = 4, .id_prefix = "d", .start_time = 520});
  testing::write_text(dir / "stream.csv", holdout.csv.substr(0, holdout.csv.find('\n') + 1) +
                                              drift.csv.substr(drift.csv.find('\n') + 1));
  auto fb = cmd_feedback(config, dir / "stream.csv");
  CHECK(fb.events == 300);
  CHECK(fb.triggers >= 1);
  CHECK(fb.adopted >= 1);
  CHECK(fs::exists(config.output_dir / kFeedbackProfilesFile));
  // Build artifacts are left untouched.
  CHECK(load_profiles(config.output_dir / kProfilesFile).groups.size() == 3);
}

TEST_CASE("build is byte-for-byte deterministic") {
  testing::TempDir dir("det");
  auto trace = three_blobs(300, 8);
  auto config = RunConfig::load(testing::write_workspace(dir, trace, 11, 3));
  cmd_build(config);
  std::map<std::string, std::string> first;
  for (const char* name : {kProfilesFile, kModelFile, kGridFile, kBuildReportFile})
    first[name] = testing::read_text(config.output_dir / name);
  config.output_dir = dir / "again";
  cmd_build(config);
  for (const auto& [name, text] : first) CHECK(testing::read_text(config.output_dir / name) == text);
}

TEST_CASE("command error codes") {
  testing::TempDir dir("errs");
  auto trace = three_blobs(200, 2);
  auto config = RunConfig::load(testing::write_workspace(dir, trace, 5, 3));

  CHECK(code_of([&] { cmd_evaluate(config, dir / "train.csv"); }) == ErrorCode::kMissingArtifact);

  auto tiny = config;
  tiny.grid.min_points = {1000};
  CHECK(code_of([&] { cmd_build(tiny); }) == ErrorCode::kNoViableConfig);

  testing::write_text(dir / "bad.csv", "job_id,submit_time,workload_type,user,gpu_type,cpu_request,cpu,mem,duration\n"
                                       "a,1,t,u,none,1,,2,3\nb,2,t,u,none,1,x,2,3\n");
  auto bad = config;
  bad.trace = dir / "bad.csv";
  CHECK(code_of([&] { cmd_build(bad); }) == ErrorCode::kZeroValidRows);

  cmd_build(config);
  testing::write_text(dir / "empty.csv", trace.csv.substr(0, trace.csv.find('\n') + 1));
  CHECK(code_of([&] { cmd_evaluate(config, dir / "empty.csv"); }) == ErrorCode::kEmptyHoldout);

  testing::write_text(dir / "broken.json", "{");
  CHECK(code_of([&] { load_profiles(dir / "broken.json"); }) == ErrorCode::kFormat);
}

TEST_CASE("classify_line: records and error records") {
  testing::TempDir dir("cls");
  auto trace = three_blobs(300, 6);
  auto config = RunConfig::load(testing::write_workspace(dir, trace, 5, 3));
  cmd_build(config);
  const auto model = load_model(config.output_dir / kModelFile);
  const auto profiles = load_profiles(config.output_dir / kProfilesFile);

  auto ok = json::parse(classify_line(
      model, &profiles, config.prediction,
      R"({"id": "x1", "metadata": {"workload_type": "type1", "user": "u3", "gpu_type": "T4", "cpu_request": 12}})", 1));
  CHECK(ok["id"] == "x1");
  CHECK(ok.contains("label"));
  CHECK(ok["probs"].size() == 3);
  CHECK(ok["behavior"].contains("cpu"));
  CHECK_FALSE(ok.contains("error"));

  // Flat form.
  auto flat = json::parse(classify_line(model, nullptr, config.prediction,
                                        R"({"workload_type": "type1", "user": "u3", "gpu_type": "T4", "cpu_request": "12"})",
                                        2));
  CHECK(flat["label"] == ok["label"]);
  CHECK_FALSE(flat.contains("behavior"));

  auto missing = json::parse(classify_line(model, &profiles, config.prediction,
                                           R"({"id": "x2", "metadata": {"workload_type": "type1"}})", 3));
  CHECK(missing["line"] == 3);
  CHECK(missing["code"] == "schema");
  CHECK(missing.contains("field"));

  auto garbage = json::parse(classify_line(model, &profiles, config.prediction, "nope", 4));
  CHECK(garbage["code"] == "format");
  CHECK(garbage["line"] == 4);

  // Unseen category values classify through the all-zero block.
  auto unseen = json::parse(classify_line(
      model, &profiles, config.prediction,
      R"({"workload_type": "type1", "user": "nobody", "gpu_type": "A100", "cpu_request": 5})", 5));
  CHECK(unseen.contains("label"));
}
