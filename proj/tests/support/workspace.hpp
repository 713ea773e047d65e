#pragma once

// Temporary on-disk workspaces holding a trace, its descriptor and a config.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "support/synthetic.hpp"

namespace wlprof::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("wlprof-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A small fast config: power transform, euclidean HDBSCAN, two min sizes.
inline std::string small_config(std::uint64_t seed, std::size_t optimal, const std::string& extra = "") {
  return R"({
  "trace": "train.csv",
  "descriptor": "train.json",
  "output_dir": "out",
  "seed": )" +
         std::to_string(seed) + R"(,
  "grid": {"transforms": ["power"], "distances": ["euclidean"], "min_points": [20, 40]},
  "optimal_cluster_count": )" +
         std::to_string(optimal) + R"(,
  "classifier": {"rounds": 20},
  "prediction": {"policy": "skew_conditional", "quantile": 0.05, "skew_threshold": 1.0},
  "feedback": {"default_delta": {"value": 0.5, "mode": "relative"}, "tau_v": 0.2, "tau_o": 1.0, "tau_f": 0.0,
               "window": {"mode": "count", "size": 200, "min_events": 50}, "tau_quality": 0.0,
               "cooldown_events": 100},
  "regen": {"grid": {"transforms": ["power"], "distances": ["euclidean"], "min_points": [30]},
            "optimal_cluster_count": 4})" +
         extra + "\n}\n";
}

// Writes train.csv, train.json and config.json for a synthetic trace.
inline std::filesystem::path write_workspace(const TempDir& dir, const SyntheticTrace& trace, std::uint64_t seed,
                                             std::size_t optimal, const std::string& extra = "") {
  write_text(dir / "train.csv", trace.csv);
  write_text(dir / "train.json", trace.descriptor.to_json_text());
  write_text(dir / "config.json", small_config(seed, optimal, extra));
  return dir / "config.json";
}

}  // namespace wlprof::testing
