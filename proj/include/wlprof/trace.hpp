#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wlprof/error.hpp"

namespace wlprof {

using Timestamp = std::int64_t;

// Metadata lookup used wherever a workload arrives without a Dataset around
// it (classify input, JSON lines).
using MetadataMap = std::map<std::string, std::string>;

// One trace record. `metadata` and `runtime` are aligned with the owning
// Dataset's schema_metadata / schema_runtime.
struct Workload {
  std::string id;
  std::vector<std::string> metadata;
  std::vector<double> runtime;
  Timestamp submitted_at = 0;
};

enum class ColumnRole { kId, kMetadata, kMetadataQuartile, kRuntime, kTimestamp, kIgnore };

std::string_view to_string(ColumnRole role);
ColumnRole column_role_from_string(std::string_view text);

// Sidecar ingestion descriptor: column name -> role. Columns present in the
// CSV but absent from the descriptor are ignored.
struct IngestDescriptor {
  std::map<std::string, ColumnRole> columns;

  static IngestDescriptor from_json_text(std::string_view text);
  static IngestDescriptor load(const std::filesystem::path& path);
  std::string to_json_text() const;
};

// Cut points (q1, median, q3) for a numeric metadata column bucketed into
// the labels Q1..Q4.
using QuartileEdges = std::array<double, 3>;

std::string quartile_label(const QuartileEdges& edges, double value);

class Dataset {
 public:
  Dataset(std::vector<std::string> schema_metadata, std::vector<std::string> schema_runtime,
          std::vector<Workload> workloads);

  const std::vector<std::string>& schema_metadata() const noexcept { return schema_metadata_; }
  const std::vector<std::string>& schema_runtime() const noexcept { return schema_runtime_; }
  const std::vector<Workload>& workloads() const noexcept { return workloads_; }
  std::size_t size() const noexcept { return workloads_.size(); }
  const Workload& operator[](std::size_t i) const { return workloads_[i]; }

  std::optional<std::size_t> metadata_index(std::string_view name) const;
  std::optional<std::size_t> runtime_index(std::string_view name) const;
  MetadataMap metadata_of(std::size_t row) const;

  // Column names used when the dataset is written back to CSV.
  std::string id_column = "id";
  std::optional<std::string> timestamp_column;
  std::map<std::string, QuartileEdges> quartile_edges;

  // Rows selected by index, preserving the given order.
  Dataset subset(std::span<const std::size_t> rows) const;
  // Appends rows of `other`; schemas must match and ids stay unique.
  Dataset concat(const Dataset& other) const;

 private:
  std::vector<std::string> schema_metadata_;
  std::vector<std::string> schema_runtime_;
  std::vector<Workload> workloads_;
};

struct LoadResult {
  Dataset dataset;
  std::size_t dropped = 0;
  std::map<std::string, std::size_t> drop_reasons;
};

// Quartile metadata is bucketed with `fixed_edges` when given (e.g. the
// edges of the training trace), otherwise with edges computed from the rows.
LoadResult load_trace(const std::filesystem::path& csv_path, const IngestDescriptor& descriptor,
                      const std::map<std::string, QuartileEdges>* fixed_edges = nullptr);
LoadResult parse_trace(std::string_view csv_text, const IngestDescriptor& descriptor,
                       const std::map<std::string, QuartileEdges>* fixed_edges = nullptr);

// Writes the CSV and returns the descriptor that reloads it.
IngestDescriptor write_trace(const Dataset& dataset, const std::filesystem::path& csv_path);
std::string render_trace(const Dataset& dataset);
IngestDescriptor descriptor_for(const Dataset& dataset);

// Shortest round-trip decimal rendering.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> column(std::size_t c) const;
  const std::vector<double>& data() const noexcept { return data_; }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class TransformKind { kNone, kStandard, kMinMax, kRobust, kPower };

std::string_view to_string(TransformKind kind);
TransformKind transform_kind_from_string(std::string_view text);

struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> feature_names;
  TransformKind transform_applied = TransformKind::kNone;
};

FeatureMatrix runtime_matrix(const Dataset& dataset);

}  // namespace wlprof
