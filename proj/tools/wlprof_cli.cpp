// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wlprof/c_api.h"

namespace {

int report(wlprof_status status) {
  if (status != WLPROF_OK)
    std::fprintf(stderr, "wlprof: error (%s): %s\n", wlprof_status_name(status), wlprof_last_error());
  return static_cast<int>(status);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  wlprof_string_free(s);
  return out;
}

std::string overrides(const std::optional<std::uint64_t>& seed, const std::string& output_dir,
                      const std::string& trace) {
  nlohmann::json j = nlohmann::json::object();
  if (seed) j["seed"] = *seed;
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  if (!trace.empty()) j["trace"] = trace;
  return j.dump();
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workload profiling toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wlprof_version()));

  std::string config, output_dir, trace, descriptor, holdout, stream, model, profiles, input, policy;
  std::string stratify_on, out_csv, out_descriptor;
  std::optional<std::uint64_t> seed;
  double fraction = 0.1;
  std::size_t size = 0;

  auto* build = app.add_subcommand("build", "Cluster a trace, build profiles and train the classifier");
  build->add_option("-c,--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  build->add_option("--seed", seed, "Override the config seed");
  build->add_option("-o,--output-dir", output_dir, "Override the output directory");
  build->add_option("--trace", trace, "Override the trace path");

  auto* classify = app.add_subcommand("classify", "Classify JSON-lines metadata records");
  classify->add_option("-c,--config", config, "Run config JSON (locates artifacts and policy)")
      ->check(CLI::ExistingFile);
  classify->add_option("-m,--model", model, "Model JSON");
  classify->add_option("-p,--profiles", profiles, "Profiles JSON; adds predicted behavior");
  classify->add_option("-i,--input", input, "Input file, one JSON object per line (default stdin)");
  classify->add_option("--policy", policy, "Prediction policy JSON");
  classify->add_option("-o,--output-dir", output_dir, "Override the output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Score behavior predictions on a holdout trace");
  evaluate->add_option("-c,--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--holdout", holdout, "Holdout trace CSV")->required();
  evaluate->add_option("-d,--descriptor", descriptor, "Holdout descriptor (default: config descriptor)");
  evaluate->add_option("-o,--output-dir", output_dir, "Override the output directory");

  auto* feedback = app.add_subcommand("feedback", "Replay a stream through the feedback loop");
  feedback->add_option("-c,--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  feedback->add_option("--stream", stream, "Stream trace CSV")->required();
  feedback->add_option("-d,--descriptor", descriptor, "Stream descriptor (default: config descriptor)");
  feedback->add_option("-o,--output-dir", output_dir, "Override the output directory");
  feedback->add_option("--seed", seed, "Override the config seed");

  auto* hopkins = app.add_subcommand("hopkins", "Hopkins clustering-tendency score of a trace");
  hopkins->add_option("--trace", trace, "Trace CSV")->required();
  hopkins->add_option("-d,--descriptor", descriptor, "Descriptor JSON")->required();
  hopkins->add_option("--fraction", fraction, "Sample fraction in (0, 1]");
  hopkins->add_option("--seed", seed, "Seed")->required();

  auto* sample = app.add_subcommand("sample", "Stratified sample of a trace");
  sample->add_option("--trace", trace, "Trace CSV")->required();
  sample->add_option("-d,--descriptor", descriptor, "Descriptor JSON")->required();
  sample->add_option("--stratify-on", stratify_on, "Metadata column")->required();
  sample->add_option("--size", size, "Target sample size")->required();
  sample->add_option("--seed", seed, "Seed")->required();
  sample->add_option("--out", out_csv, "Output CSV")->required();
  sample->add_option("--out-descriptor", out_descriptor, "Output descriptor (default: <out>.descriptor.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(WLPROF_E_INVALID_ARGUMENT);
  }

  if (build->parsed()) {
    char* summary = nullptr;
    const auto status = wlprof_build(config.c_str(), overrides(seed, output_dir, trace).c_str(), &summary);
    if (status == WLPROF_OK) std::cout << take(summary) << "\n";
    return report(status);
  }

  if (evaluate->parsed()) {
    char* summary = nullptr;
    const auto status = wlprof_evaluate(config.c_str(), overrides(seed, output_dir, trace).c_str(), holdout.c_str(),
                                        or_null(descriptor), &summary);
    if (status == WLPROF_OK) {
      const auto j = nlohmann::json::parse(take(summary));
      std::cout << "fraction_below_50: " << j["fraction_below_50"].dump() << "\n" << j.dump() << "\n";
    }
    return report(status);
  }

  if (feedback->parsed()) {
    char* summary = nullptr;
    const auto status = wlprof_feedback(config.c_str(), overrides(seed, output_dir, trace).c_str(), stream.c_str(),
                                        or_null(descriptor), &summary);
    if (status == WLPROF_OK) std::cout << take(summary) << "\n";
    return report(status);
  }

  if (hopkins->parsed()) {
    wlprof_dataset* data = nullptr;
    auto status = wlprof_dataset_load(trace.c_str(), descriptor.c_str(), &data);
    if (status != WLPROF_OK) return report(status);
    double score = 0.0;
    std::size_t used = 0;
    status = wlprof_hopkins(data, fraction, *seed, &score, &used);
    wlprof_dataset_free(data);
    if (status == WLPROF_OK)
      std::cout << nlohmann::json{{"score", score}, {"sample_size", used}, {"seed", *seed}}.dump() << "\n";
    return report(status);
  }

  if (sample->parsed()) {
    if (out_descriptor.empty()) out_descriptor = out_csv + ".descriptor.json";
    wlprof_dataset* data = nullptr;
    auto status = wlprof_dataset_load(trace.c_str(), descriptor.c_str(), &data);
    if (status != WLPROF_OK) return report(status);
    wlprof_dataset* sampled = nullptr;
    status = wlprof_sample(data, stratify_on.c_str(), size, *seed, &sampled);
    wlprof_dataset_free(data);
    if (status == WLPROF_OK) {
      status = wlprof_dataset_write(sampled, out_csv.c_str(), out_descriptor.c_str());
      if (status == WLPROF_OK)
        std::cout << nlohmann::json{{"rows", wlprof_dataset_size(sampled)}, {"out", out_csv}}.dump() << "\n";
    }
    wlprof_dataset_free(sampled);
    return report(status);
  }

  // classify
  std::string policy_text = policy;
  if (!config.empty()) {
    const auto over = overrides(std::nullopt, output_dir, "");
    char* dir = nullptr;
    auto status = wlprof_config_output_dir(config.c_str(), over.c_str(), &dir);
    if (status != WLPROF_OK) return report(status);
    const std::string out = take(dir);
    if (model.empty()) model = out + "/model.json";
    if (profiles.empty()) profiles = out + "/profiles.json";
    if (policy_text.empty()) {
      char* p = nullptr;
      status = wlprof_config_policy(config.c_str(), over.c_str(), &p);
      if (status != WLPROF_OK) return report(status);
      policy_text = take(p);
    }
  }
  if (model.empty()) {
    std::fprintf(stderr, "wlprof: error (invalid_argument): classify needs --model or --config\n");
    return WLPROF_E_INVALID_ARGUMENT;
  }
  wlprof_model* m = nullptr;
  auto status = wlprof_model_load(model.c_str(), &m);
  if (status != WLPROF_OK) return report(status);
  wlprof_profiles* p = nullptr;
  if (!profiles.empty()) {
    status = wlprof_profiles_load(profiles.c_str(), &p);
    if (status != WLPROF_OK) {
      wlprof_model_free(m);
      return report(status);
    }
  }

  std::ifstream file;
  if (!input.empty()) {
    file.open(input);
    if (!file) {
      wlprof_model_free(m);
      wlprof_profiles_free(p);
      std::fprintf(stderr, "wlprof: error (io): cannot read %s\n", input.c_str());
      return WLPROF_E_IO;
    }
  }
  std::istream& in = input.empty() ? std::cin : file;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    char* record = nullptr;
    wlprof_classify_json(m, p, or_null(policy_text), line.c_str(), number, &record);
    if (record) std::cout << take(record) << "\n";
  }
  wlprof_model_free(m);
  wlprof_profiles_free(p);
  return 0;
}
