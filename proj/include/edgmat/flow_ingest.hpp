#pragma once

// NetFlow-style CSV ingestion: schema, feature encoding, normalization and
// class-stratified sampling/splitting.
//
// Encoded feature layout, for a schema with numeric columns N and categorical
// columns C1..Cm: [N in schema order | one-hot(C1) | ... | one-hot(Cm)], where
// each one-hot block has |vocabulary| + 1 slots and the last slot is the
// reserved "other" bucket for values outside the vocabulary. The four
// identifier columns never enter the feature vector.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgmat/kv_config.hpp"

namespace edgmat {

using ClassId = std::uint32_t;

struct FlowRecord {
  std::string src_ip;
  std::uint16_t src_port = 0;
  std::string dst_ip;
  std::uint16_t dst_port = 0;
  std::vector<double> features;
  ClassId label = 0;
  std::size_t row_index = 0;  // 0-based data-row ordinal in the source file

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public IngestError {
 public:
  SchemaError(std::string message, std::string column = {})
      : IngestError(std::move(message)), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class RowError : public IngestError {
 public:
  RowError(std::size_t row, const std::string& message)
      : IngestError("row " + std::to_string(row) + ": " + message), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class LabelError : public IngestError {
 public:
  LabelError(std::size_t row, std::string label)
      : IngestError("row " + std::to_string(row) + ": unknown label '" + label + "'"),
        row_(row),
        label_(std::move(label)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& label() const noexcept { return label_; }

 private:
  std::size_t row_;
  std::string label_;
};

struct CategoricalColumn {
  std::string name;
  std::vector<std::string> vocabulary;
};

/// Column roles for one dataset.
///
/// Text form (KvConfig):
///   identifier_columns = SRC_IP, SRC_PORT, DST_IP, DST_PORT
///   label_column       = Attack
///   class_names        = Benign, DDoS, ...
///   numeric_columns    = IN_BYTES, OUT_BYTES, ...
///   categorical.PROTOCOL = 6, 17, 1
/// Columns present in the CSV but absent from the schema are ignored.
struct DatasetSchema {
  std::array<std::string, 4> identifier_columns;  // src ip, src port, dst ip, dst port
  std::string label_column;
  std::vector<CategoricalColumn> categorical_columns;
  std::vector<std::string> numeric_columns;
  std::vector<std::string> class_names;

  static DatasetSchema from_config(const KvConfig& cfg);
  static DatasetSchema load(const std::filesystem::path& path);

  void validate() const;
  std::size_t feature_dim() const noexcept;
  std::size_t class_count() const noexcept { return class_names.size(); }
  std::vector<std::size_t> numeric_positions() const;
  std::optional<ClassId> class_id(std::string_view name) const;
  std::vector<std::string> feature_names() const;
};

struct ParseOptions {
  /// Encode rows with OpenMP; output is identical to the sequential path.
  bool parallel = true;
};

std::vector<FlowRecord> parse_csv(const std::filesystem::path& path, const DatasetSchema& schema,
                                  ParseOptions opts = {});
std::vector<FlowRecord> parse_csv_text(std::string_view text, const DatasetSchema& schema,
                                       ParseOptions opts = {});

/// Per-position z-score statistics (population stddev).
struct NormStats {
  std::vector<std::size_t> positions;
  std::vector<double> mean;
  std::vector<double> stddev;
};

NormStats normalize_fit(std::span<const FlowRecord> records,
                        std::span<const std::size_t> positions);
std::vector<FlowRecord> normalize_apply(std::span<const FlowRecord> records,
                                        const NormStats& stats);

std::vector<FlowRecord> stratified_sample(std::span<const FlowRecord> records, double fraction,
                                          std::uint64_t seed);

enum class SplitMode { transductive, inductive };

SplitMode parse_split_mode(std::string_view s);
std::string_view to_string(SplitMode m) noexcept;

struct SplitSpec {
  SplitMode mode = SplitMode::transductive;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<FlowRecord> train;
  std::vector<FlowRecord> test;
  std::vector<std::string> warnings;
};

SplitResult stratified_split(std::span<const FlowRecord> records, const SplitSpec& spec);

std::vector<std::size_t> class_histogram(std::span<const FlowRecord> records,
                                         std::size_t class_count);

/// Debug dump of the encoded matrix: row_index, src, dst, label, features.
void write_encoded_csv(std::ostream& out, std::span<const FlowRecord> records,
                       const DatasetSchema& schema);

}  // namespace edgmat
