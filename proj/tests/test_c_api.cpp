#include "doctest.h"

#include <cstring>
#include <string>

#include "json.hpp"
#include "support/workspace.hpp"
#include "wlprof/c_api.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  wlprof_string_free(s);
  return out;
}

struct Workspace {
  wlprof::testing::TempDir dir{"capi"};
  wlprof::testing::SyntheticTrace trace = wlprof::testing::make_trace({.n = 300, .clusters = {0, 1, 2}, .seed = 12});
  fs::path config = wlprof::testing::write_workspace(dir, trace, 3, 3);
};

}  // namespace

TEST_CASE("c api: version and status names") {
  CHECK(std::strcmp(wlprof_version(), "1.0.0") == 0);
  CHECK(std::strcmp(wlprof_status_name(WLPROF_OK), "ok") == 0);
  CHECK(std::strcmp(wlprof_status_name(WLPROF_E_EMPTY_HOLDOUT), "empty_holdout") == 0);
  CHECK(std::strcmp(wlprof_status_name(WLPROF_E_NUMERIC_DOMAIN), "numeric_domain") == 0);
  CHECK(std::strcmp(wlprof_status_name(99), "unknown") == 0);
}

TEST_CASE("c api: datasets, hopkins and sampling") {
  Workspace ws;
  wlprof_dataset* ds = nullptr;
  REQUIRE(wlprof_dataset_load((ws.dir / "train.csv").c_str(), (ws.dir / "train.json").c_str(), &ds) == WLPROF_OK);
  CHECK(wlprof_dataset_size(ds) == 300);
  CHECK(wlprof_dataset_dropped(ds) == 0);

  double score = -1;
  size_t m = 0;
  CHECK(wlprof_hopkins(ds, 0.1, 1, &score, &m) == WLPROF_OK);
  CHECK(score < 0.15);
  CHECK(m == 50);

  wlprof_dataset* sample = nullptr;
  CHECK(wlprof_sample(ds, "workload_type", 90, 2, &sample) == WLPROF_OK);
  CHECK(wlprof_dataset_size(sample) == 90);
  CHECK(wlprof_dataset_write(sample, (ws.dir / "s.csv").c_str(), (ws.dir / "s.json").c_str()) == WLPROF_OK);
  wlprof_dataset* again = nullptr;
  CHECK(wlprof_dataset_load((ws.dir / "s.csv").c_str(), (ws.dir / "s.json").c_str(), &again) == WLPROF_OK);
  CHECK(wlprof_dataset_size(again) == 90);
  CHECK(wlprof_sample(ds, "no_such_column", 10, 2, &sample) == WLPROF_E_INVALID_ARGUMENT);
  wlprof_dataset_free(again);
  wlprof_dataset_free(sample);
  wlprof_dataset_free(ds);

  wlprof_dataset* missing = nullptr;
  CHECK(wlprof_dataset_load((ws.dir / "nope.csv").c_str(), (ws.dir / "train.json").c_str(), &missing) == WLPROF_E_IO);
  CHECK(missing == nullptr);
  CHECK(std::strlen(wlprof_last_error()) > 0);
  CHECK(wlprof_dataset_load(nullptr, nullptr, &missing) == WLPROF_E_INVALID_ARGUMENT);
}

TEST_CASE("c api: build, load artifacts, classify, evaluate") {
  Workspace ws;
  char* summary = nullptr;
  REQUIRE(wlprof_build(ws.config.c_str(), nullptr, &summary) == WLPROF_OK);
  auto s = json::parse(take(summary));
  CHECK(s["profiles"] == 3);

  char* out_dir = nullptr;
  REQUIRE(wlprof_config_output_dir(ws.config.c_str(), nullptr, &out_dir) == WLPROF_OK);
  const fs::path out = take(out_dir);
  CHECK(out == ws.dir / "out");

  wlprof_profiles* profiles = nullptr;
  wlprof_model* model = nullptr;
  REQUIRE(wlprof_profiles_load((out / "profiles.json").c_str(), &profiles) == WLPROF_OK);
  REQUIRE(wlprof_model_load((out / "model.json").c_str(), &model) == WLPROF_OK);
  CHECK(wlprof_profiles_count(profiles) == 3);
  CHECK(wlprof_model_class_count(model) == 3);

  char* policy = nullptr;
  REQUIRE(wlprof_config_policy(ws.config.c_str(), nullptr, &policy) == WLPROF_OK);
  const std::string policy_json = take(policy);
  CHECK(json::parse(policy_json)["policy"] == "skew_conditional");

  char* rec = nullptr;
  CHECK(wlprof_classify_json(model, profiles, policy_json.c_str(),
                             R"({"workload_type": "type2", "user": "u1", "gpu_type": "none", "cpu_request": 3})", 1,
                             &rec) == WLPROF_OK);
  auto r = json::parse(take(rec));
  CHECK(r.contains("label"));
  CHECK(r.contains("behavior"));

  CHECK(wlprof_classify_json(model, nullptr, nullptr, R"({"workload_type": "type2"})", 2, &rec) == WLPROF_E_SCHEMA);
  auto err = json::parse(take(rec));
  CHECK(err["line"] == 2);
  CHECK(err["code"] == "schema");

  wlprof_model_free(model);
  wlprof_profiles_free(profiles);

  auto holdout = wlprof::testing::make_trace({.n = 60, .clusters = {0, 1, 2}, .seed = 13, .id_prefix = "h"});
  wlprof::testing::write_text(ws.dir / "holdout.csv", holdout.csv);
  CHECK(wlprof_evaluate(ws.config.c_str(), nullptr, (ws.dir / "holdout.csv").c_str(), nullptr, &summary) == WLPROF_OK);
  auto e = json::parse(take(summary));
  CHECK(e["evaluated"] == 60);

  wlprof::testing::write_text(ws.dir / "empty.csv", holdout.csv.substr(0, holdout.csv.find('\n') + 1));
  summary = nullptr;
  CHECK(wlprof_evaluate(ws.config.c_str(), nullptr, (ws.dir / "empty.csv").c_str(), nullptr, &summary) ==
        WLPROF_E_EMPTY_HOLDOUT);
  CHECK(summary == nullptr);
}

TEST_CASE("c api: overrides and failures map to statuses") {
  Workspace ws;
  const std::string over = json{{"grid", {{"min_points", {5000}}}}}.dump();
  CHECK(wlprof_build(ws.config.c_str(), over.c_str(), nullptr) == WLPROF_E_NO_VIABLE_CONFIG);
  CHECK(wlprof_build(ws.config.c_str(), "{\"bogus\": 1}", nullptr) == WLPROF_E_SCHEMA);
  CHECK(wlprof_build((ws.dir / "missing.json").c_str(), nullptr, nullptr) == WLPROF_E_IO);
  CHECK(wlprof_evaluate(ws.config.c_str(), nullptr, (ws.dir / "train.csv").c_str(), nullptr, nullptr) ==
        WLPROF_E_MISSING_ARTIFACT);
  wlprof_model* model = nullptr;
  wlprof::testing::write_text(ws.dir / "bad.json", "{}");
  CHECK(wlprof_model_load((ws.dir / "bad.json").c_str(), &model) == WLPROF_E_FORMAT);
  CHECK(model == nullptr);
}
