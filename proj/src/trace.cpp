#include "wlprof/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "wlprof/stats.hpp"

namespace wlprof {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInternal: return "internal";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kZeroValidRows: return "zero_valid_rows";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kNoViableConfig: return "no_viable_config";
    case ErrorCode::kEmptyProfileSet: return "empty_profile_set";
    case ErrorCode::kEmptyHoldout: return "empty_holdout";
    case ErrorCode::kMissingArtifact: return "missing_artifact";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kNumericDomain: return "numeric_domain";
  }
  return "unknown";
}

std::string_view to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::kId: return "id";
    case ColumnRole::kMetadata: return "metadata";
    case ColumnRole::kMetadataQuartile: return "metadata_quartile";
    case ColumnRole::kRuntime: return "runtime";
    case ColumnRole::kTimestamp: return "timestamp";
    case ColumnRole::kIgnore: return "ignore";
  }
  return "ignore";
}

ColumnRole column_role_from_string(std::string_view text) {
  for (auto role : {ColumnRole::kId, ColumnRole::kMetadata, ColumnRole::kMetadataQuartile,
                    ColumnRole::kRuntime, ColumnRole::kTimestamp, ColumnRole::kIgnore}) {
    if (to_string(role) == text) return role;
  }
  throw Error(ErrorCode::kSchema, "unknown column role '" + std::string(text) + "'");
}

IngestDescriptor IngestDescriptor::from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("descriptor is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("columns") || !doc["columns"].is_object())
    throw Error(ErrorCode::kSchema, "descriptor must be an object with a 'columns' object");
  IngestDescriptor out;
  for (const auto& [name, role] : doc["columns"].items()) {
    if (!role.is_string()) throw Error(ErrorCode::kSchema, "role of column '" + name + "' is not a string");
    out.columns[name] = column_role_from_string(role.get<std::string>());
  }
  return out;
}

IngestDescriptor IngestDescriptor::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read descriptor " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string IngestDescriptor::to_json_text() const {
  nlohmann::json cols = nlohmann::json::object();
  for (const auto& [name, role] : columns) cols[name] = std::string(to_string(role));
  nlohmann::json doc;
  doc["columns"] = cols;
  return doc.dump(2) + "\n";
}

std::string quartile_label(const QuartileEdges& edges, double value) {
  if (value <= edges[0]) return "Q1";
  if (value <= edges[1]) return "Q2";
  if (value <= edges[2]) return "Q3";
  return "Q4";
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

namespace {

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        row_has_content = false;
        break;
      default:
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

Dataset::Dataset(std::vector<std::string> schema_metadata, std::vector<std::string> schema_runtime,
                 std::vector<Workload> workloads)
    : schema_metadata_(std::move(schema_metadata)),
      schema_runtime_(std::move(schema_runtime)),
      workloads_(std::move(workloads)) {
  if (schema_runtime_.empty()) throw Error(ErrorCode::kSchema, "runtime schema is empty");
  if (schema_metadata_.empty()) throw Error(ErrorCode::kSchema, "metadata schema is empty");
  std::unordered_set<std::string> names;
  for (const auto& n : schema_metadata_)
    if (!names.insert(n).second) throw Error(ErrorCode::kSchema, "duplicate feature name '" + n + "'");
  for (const auto& n : schema_runtime_)
    if (!names.insert(n).second) throw Error(ErrorCode::kSchema, "duplicate feature name '" + n + "'");
  std::unordered_set<std::string> ids;
  for (const auto& w : workloads_) {
    if (w.metadata.size() != schema_metadata_.size() || w.runtime.size() != schema_runtime_.size())
      throw Error(ErrorCode::kSchema, "workload '" + w.id + "' does not match the dataset schema");
    for (double v : w.runtime)
      if (!std::isfinite(v)) throw Error(ErrorCode::kSchema, "workload '" + w.id + "' has a non-finite runtime value");
    if (!ids.insert(w.id).second) throw Error(ErrorCode::kDuplicateId, "duplicate workload id '" + w.id + "'");
  }
}

std::optional<std::size_t> Dataset::metadata_index(std::string_view name) const {
  auto it = std::find(schema_metadata_.begin(), schema_metadata_.end(), name);
  if (it == schema_metadata_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - schema_metadata_.begin());
}

std::optional<std::size_t> Dataset::runtime_index(std::string_view name) const {
  auto it = std::find(schema_runtime_.begin(), schema_runtime_.end(), name);
  if (it == schema_runtime_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - schema_runtime_.begin());
}

MetadataMap Dataset::metadata_of(std::size_t row) const {
  MetadataMap out;
  for (std::size_t j = 0; j < schema_metadata_.size(); ++j) out[schema_metadata_[j]] = workloads_[row].metadata[j];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<Workload> picked;
  picked.reserve(rows.size());
  for (std::size_t r : rows) picked.push_back(workloads_.at(r));
  Dataset out(schema_metadata_, schema_runtime_, std::move(picked));
  out.id_column = id_column;
  out.timestamp_column = timestamp_column;
  out.quartile_edges = quartile_edges;
  return out;
}

Dataset Dataset::concat(const Dataset& other) const {
  if (other.schema_metadata_ != schema_metadata_ || other.schema_runtime_ != schema_runtime_)
    throw Error(ErrorCode::kSchema, "cannot concatenate datasets with different schemas");
  std::vector<Workload> all = workloads_;
  all.insert(all.end(), other.workloads_.begin(), other.workloads_.end());
  Dataset out(schema_metadata_, schema_runtime_, std::move(all));
  out.id_column = id_column;
  out.timestamp_column = timestamp_column;
  out.quartile_edges = quartile_edges;
  return out;
}

LoadResult parse_trace(std::string_view csv_text, const IngestDescriptor& descriptor,
                       const std::map<std::string, QuartileEdges>* fixed_edges) {
  auto rows = parse_csv(csv_text);
  if (rows.empty()) throw Error(ErrorCode::kSchema, "trace has no header row");
  const auto& header = rows.front();

  for (const auto& [name, role] : descriptor.columns) {
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw Error(ErrorCode::kSchema, "descriptor column '" + name + "' not found in the trace header");
  }

  std::optional<std::size_t> id_col, ts_col;
  std::vector<std::size_t> meta_cols, runtime_cols;
  std::vector<bool> meta_is_quartile;
  std::vector<std::string> meta_names, runtime_names;
  std::string id_name;
  std::optional<std::string> ts_name;
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto it = descriptor.columns.find(header[c]);
    if (it == descriptor.columns.end()) continue;
    switch (it->second) {
      case ColumnRole::kId:
        if (id_col) throw Error(ErrorCode::kSchema, "descriptor declares more than one id column");
        id_col = c;
        id_name = header[c];
        break;
      case ColumnRole::kTimestamp:
        if (ts_col) throw Error(ErrorCode::kSchema, "descriptor declares more than one timestamp column");
        ts_col = c;
        ts_name = header[c];
        break;
      case ColumnRole::kMetadata:
      case ColumnRole::kMetadataQuartile:
        meta_cols.push_back(c);
        meta_is_quartile.push_back(it->second == ColumnRole::kMetadataQuartile);
        meta_names.push_back(header[c]);
        break;
      case ColumnRole::kRuntime:
        runtime_cols.push_back(c);
        runtime_names.push_back(header[c]);
        break;
      case ColumnRole::kIgnore:
        break;
    }
  }
  if (!id_col) throw Error(ErrorCode::kSchema, "descriptor declares no id column");
  if (meta_cols.empty()) throw Error(ErrorCode::kSchema, "descriptor declares no metadata column");
  if (runtime_cols.empty()) throw Error(ErrorCode::kSchema, "descriptor declares no runtime column");

  LoadResult result{Dataset(meta_names, runtime_names, {}), 0, {}};
  auto drop = [&](const char* reason) {
    ++result.dropped;
    ++result.drop_reasons[reason];
  };

  std::vector<Workload> accepted;
  std::vector<std::vector<double>> quartile_values(meta_cols.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      drop("field_count");
      continue;
    }
    Workload w;
    w.id = row[*id_col];
    if (is_blank(w.id)) {
      drop("missing_id");
      continue;
    }
    bool ok = true;
    for (std::size_t j = 0; j < meta_cols.size() && ok; ++j) {
      const auto& cell = row[meta_cols[j]];
      if (is_blank(cell)) {
        drop("missing_metadata");
        ok = false;
      } else if (meta_is_quartile[j] && !parse_double(cell)) {
        drop("non_numeric_quartile_metadata");
        ok = false;
      } else {
        w.metadata.push_back(cell);
      }
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < runtime_cols.size() && ok; ++j) {
      const auto& cell = row[runtime_cols[j]];
      if (is_blank(cell)) {
        drop("missing_runtime");
        ok = false;
        break;
      }
      auto v = parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        drop("invalid_runtime");
        ok = false;
        break;
      }
      w.runtime.push_back(*v);
    }
    if (!ok) continue;
    if (ts_col) {
      auto v = parse_double(row[*ts_col]);
      if (!v || !std::isfinite(*v) || std::floor(*v) != *v) {
        drop("invalid_timestamp");
        continue;
      }
      w.submitted_at = static_cast<Timestamp>(*v);
    } else {
      w.submitted_at = static_cast<Timestamp>(accepted.size());
    }
    for (std::size_t j = 0; j < meta_cols.size(); ++j)
      if (meta_is_quartile[j]) quartile_values[j].push_back(*parse_double(w.metadata[j]));
    accepted.push_back(std::move(w));
  }
  if (accepted.empty()) throw Error(ErrorCode::kZeroValidRows, "trace contains no valid rows");

  std::map<std::string, QuartileEdges> edges;
  for (std::size_t j = 0; j < meta_cols.size(); ++j) {
    if (!meta_is_quartile[j]) continue;
    QuartileEdges e;
    if (fixed_edges) {
      auto it = fixed_edges->find(meta_names[j]);
      if (it == fixed_edges->end())
        throw Error(ErrorCode::kSchema, "no quartile edges for metadata column '" + meta_names[j] + "'");
      e = it->second;
    } else {
      auto values = quartile_values[j];
      std::sort(values.begin(), values.end());
      e = {quantile_sorted(values, 0.25), quantile_sorted(values, 0.5), quantile_sorted(values, 0.75)};
    }
    edges[meta_names[j]] = e;
    for (auto& w : accepted) w.metadata[j] = quartile_label(e, *parse_double(w.metadata[j]));
  }

  Dataset ds(std::move(meta_names), std::move(runtime_names), std::move(accepted));
  ds.id_column = id_name;
  ds.timestamp_column = ts_name;
  ds.quartile_edges = std::move(edges);
  result.dataset = std::move(ds);
  return result;
}

LoadResult load_trace(const std::filesystem::path& csv_path, const IngestDescriptor& descriptor,
                      const std::map<std::string, QuartileEdges>* fixed_edges) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read trace " + csv_path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), descriptor, fixed_edges);
}

IngestDescriptor descriptor_for(const Dataset& dataset) {
  IngestDescriptor d;
  d.columns[dataset.id_column] = ColumnRole::kId;
  if (dataset.timestamp_column) d.columns[*dataset.timestamp_column] = ColumnRole::kTimestamp;
  for (const auto& n : dataset.schema_metadata()) d.columns[n] = ColumnRole::kMetadata;
  for (const auto& n : dataset.schema_runtime()) d.columns[n] = ColumnRole::kRuntime;
  return d;
}

std::string render_trace(const Dataset& dataset) {
  std::string out = csv_escape(dataset.id_column);
  if (dataset.timestamp_column) out += "," + csv_escape(*dataset.timestamp_column);
  for (const auto& n : dataset.schema_metadata()) out += "," + csv_escape(n);
  for (const auto& n : dataset.schema_runtime()) out += "," + csv_escape(n);
  out += "\n";
  for (const auto& w : dataset.workloads()) {
    out += csv_escape(w.id);
    if (dataset.timestamp_column) out += "," + std::to_string(w.submitted_at);
    for (const auto& m : w.metadata) out += "," + csv_escape(m);
    for (double v : w.runtime) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

IngestDescriptor write_trace(const Dataset& dataset, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write trace " + csv_path.string());
  out << render_trace(dataset);
  if (!out) throw Error(ErrorCode::kIo, "failed writing trace " + csv_path.string());
  return descriptor_for(dataset);
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw Error(ErrorCode::kInvalidArgument, "ragged matrix rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kNone: return "none";
    case TransformKind::kStandard: return "standard";
    case TransformKind::kMinMax: return "minmax";
    case TransformKind::kRobust: return "robust";
    case TransformKind::kPower: return "power";
  }
  return "none";
}

TransformKind transform_kind_from_string(std::string_view text) {
  for (auto k : {TransformKind::kNone, TransformKind::kStandard, TransformKind::kMinMax, TransformKind::kRobust,
                 TransformKind::kPower}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown transform '" + std::string(text) + "'");
}

FeatureMatrix runtime_matrix(const Dataset& dataset) {
  FeatureMatrix fm;
  fm.values = Matrix(dataset.size(), dataset.schema_runtime().size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& rt = dataset[i].runtime;
    std::copy(rt.begin(), rt.end(), fm.values.row(i).begin());
  }
  fm.feature_names = dataset.schema_runtime();
  fm.transform_applied = TransformKind::kNone;
  return fm;
}

}  // namespace wlprof
