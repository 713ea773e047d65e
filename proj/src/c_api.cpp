#include "wlprof/c_api.h"

#include <cmath>
#include <cstring>
#include <string>

#include "json.hpp"
#include "wlprof/pipeline.hpp"
#include "wlprof/preprocess.hpp"

struct wlprof_dataset {
  wlprof::Dataset dataset;
  std::size_t dropped = 0;
};

struct wlprof_profiles {
  wlprof::ProfileSet profiles;
};

struct wlprof_model {
  wlprof::ClassifierModel model;
};

namespace {

thread_local std::string last_error;

wlprof_status fail(wlprof_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
wlprof_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return WLPROF_OK;
  } catch (const wlprof::Error& e) {
    return fail(static_cast<wlprof_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(WLPROF_E_FORMAT, e.what());
  } catch (const std::exception& e) {
    return fail(WLPROF_E_INTERNAL, e.what());
  } catch (...) {
    return fail(WLPROF_E_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw wlprof::Error(wlprof::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

std::string optional_text(const char* s) { return s ? std::string(s) : std::string(); }

wlprof::PredictionPolicy parse_policy(const char* text) {
  wlprof::PredictionPolicy policy;
  if (!text || !*text) return policy;
  const auto j = nlohmann::json::parse(text);
  if (j.contains("policy")) policy.kind = wlprof::policy_kind_from_string(j["policy"].get<std::string>());
  if (j.contains("quantile")) policy.quantile = j["quantile"].get<double>();
  if (j.contains("skew_threshold")) {
    const auto& s = j["skew_threshold"];
    policy.skew_threshold = s.is_string() ? (s.get<std::string>() == "-inf" ? -INFINITY : INFINITY) : s.get<double>();
  }
  policy.validate();
  return policy;
}

}  // namespace

extern "C" {

const char* wlprof_version(void) { return "1.0.0"; }

const char* wlprof_status_name(int status) {
  if (status < 0 || status > WLPROF_E_NUMERIC_DOMAIN) return "unknown";
  return wlprof::error_code_name(static_cast<wlprof::ErrorCode>(status));
}

const char* wlprof_last_error(void) { return last_error.c_str(); }

void wlprof_string_free(char* s) { std::free(s); }

wlprof_status wlprof_dataset_load(const char* csv_path, const char* descriptor_path, wlprof_dataset** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(descriptor_path, "descriptor_path");
    require(out, "out");
    *out = nullptr;
    auto loaded = wlprof::load_trace(csv_path, wlprof::IngestDescriptor::load(descriptor_path));
    *out = new wlprof_dataset{std::move(loaded.dataset), loaded.dropped};
  });
}

void wlprof_dataset_free(wlprof_dataset* dataset) { delete dataset; }

size_t wlprof_dataset_size(const wlprof_dataset* dataset) { return dataset ? dataset->dataset.size() : 0; }

size_t wlprof_dataset_dropped(const wlprof_dataset* dataset) { return dataset ? dataset->dropped : 0; }

wlprof_status wlprof_dataset_write(const wlprof_dataset* dataset, const char* csv_path, const char* descriptor_path) {
  return guarded([&] {
    require(dataset, "dataset");
    require(csv_path, "csv_path");
    require(descriptor_path, "descriptor_path");
    const auto descriptor = wlprof::write_trace(dataset->dataset, csv_path);
    wlprof::write_file_atomic(descriptor_path, descriptor.to_json_text());
  });
}

wlprof_status wlprof_hopkins(const wlprof_dataset* dataset, double sample_fraction, uint64_t seed, double* score,
                             size_t* sample_size) {
  return guarded([&] {
    require(dataset, "dataset");
    require(score, "score");
    const auto h = wlprof::hopkins(wlprof::runtime_matrix(dataset->dataset), sample_fraction, seed);
    *score = h.score;
    if (sample_size) *sample_size = h.sample_size;
  });
}

wlprof_status wlprof_sample(const wlprof_dataset* dataset, const char* stratify_on, size_t target_size, uint64_t seed,
                            wlprof_dataset** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(stratify_on, "stratify_on");
    require(out, "out");
    *out = nullptr;
    auto sampled = wlprof::stratified_sample(dataset->dataset, stratify_on, target_size, seed);
    *out = new wlprof_dataset{std::move(sampled), 0};
  });
}

wlprof_status wlprof_profiles_load(const char* path, wlprof_profiles** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new wlprof_profiles{wlprof::load_profiles(path)};
  });
}

void wlprof_profiles_free(wlprof_profiles* profiles) { delete profiles; }

size_t wlprof_profiles_count(const wlprof_profiles* profiles) { return profiles ? profiles->profiles.groups.size() : 0; }

wlprof_status wlprof_model_load(const char* path, wlprof_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new wlprof_model{wlprof::load_model(path)};
  });
}

void wlprof_model_free(wlprof_model* model) { delete model; }

size_t wlprof_model_class_count(const wlprof_model* model) { return model ? model->model.class_count() : 0; }

wlprof_status wlprof_classify_json(const wlprof_model* model, const wlprof_profiles* profiles, const char* policy_json,
                                   const char* input_line, size_t line_number, char** out_json) {
  std::string record;
  auto status = guarded([&] {
    require(model, "model");
    require(input_line, "input_line");
    require(out_json, "out_json");
    *out_json = nullptr;
    const auto policy = parse_policy(policy_json);
    record = wlprof::classify_line(model->model, profiles ? &profiles->profiles : nullptr, policy, input_line,
                                   line_number);
    const auto parsed = nlohmann::json::parse(record);
    if (parsed.contains("error")) {
      const auto code = parsed.value("code", std::string("format"));
      auto err = wlprof::ErrorCode::kFormat;
      for (int c = 0; c <= WLPROF_E_NUMERIC_DOMAIN; ++c)
        if (code == wlprof::error_code_name(static_cast<wlprof::ErrorCode>(c))) err = static_cast<wlprof::ErrorCode>(c);
      *out_json = copy_string(record);
      throw wlprof::Error(err, parsed["error"].get<std::string>());
    }
    *out_json = copy_string(record);
  });
  return status;
}

wlprof_status wlprof_build(const char* config_path, const char* overrides_json, char** summary_json) {
  return guarded([&] {
    require(config_path, "config_path");
    const auto config = wlprof::RunConfig::load(config_path, optional_text(overrides_json));
    const auto summary = wlprof::cmd_build(config);
    if (summary_json) *summary_json = copy_string(summary.to_json_text());
  });
}

wlprof_status wlprof_evaluate(const char* config_path, const char* overrides_json, const char* holdout_path,
                              const char* descriptor_path, char** summary_json) {
  return guarded([&] {
    require(config_path, "config_path");
    require(holdout_path, "holdout_path");
    const auto config = wlprof::RunConfig::load(config_path, optional_text(overrides_json));
    std::optional<std::filesystem::path> descriptor;
    if (descriptor_path) descriptor = descriptor_path;
    const auto summary = wlprof::cmd_evaluate(config, holdout_path, descriptor);
    if (summary_json) *summary_json = copy_string(summary.to_json_text());
  });
}

wlprof_status wlprof_feedback(const char* config_path, const char* overrides_json, const char* stream_path,
                              const char* descriptor_path, char** summary_json) {
  return guarded([&] {
    require(config_path, "config_path");
    require(stream_path, "stream_path");
    const auto config = wlprof::RunConfig::load(config_path, optional_text(overrides_json));
    std::optional<std::filesystem::path> descriptor;
    if (descriptor_path) descriptor = descriptor_path;
    const auto summary = wlprof::cmd_feedback(config, stream_path, descriptor);
    if (summary_json) *summary_json = copy_string(summary.to_json_text());
  });
}

wlprof_status wlprof_config_policy(const char* config_path, const char* overrides_json, char** policy_json) {
  return guarded([&] {
    require(config_path, "config_path");
    require(policy_json, "policy_json");
    const auto config = wlprof::RunConfig::load(config_path, optional_text(overrides_json));
    nlohmann::json j;
    j["policy"] = std::string(wlprof::to_string(config.prediction.kind));
    j["quantile"] = config.prediction.quantile;
    const double s = config.prediction.skew_threshold;
    j["skew_threshold"] = std::isinf(s) ? nlohmann::json(s > 0 ? "inf" : "-inf") : nlohmann::json(s);
    *policy_json = copy_string(j.dump());
  });
}

wlprof_status wlprof_config_output_dir(const char* config_path, const char* overrides_json, char** path) {
  return guarded([&] {
    require(config_path, "config_path");
    require(path, "path");
    const auto config = wlprof::RunConfig::load(config_path, optional_text(overrides_json));
    *path = copy_string(config.output_dir.string());
  });
}

}  // extern "C"
