#include "edgmat/flow_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "edgmat/csv.hpp"
#include "edgmat/log.hpp"
#include "edgmat/rng.hpp"

namespace edgmat {

// ---------------------------------------------------------------- schema ---

DatasetSchema DatasetSchema::from_config(const KvConfig& cfg) {
  DatasetSchema s;
  const auto ids = split_list(cfg.require("identifier_columns"));
  if (ids.size() != 4) {
    throw SchemaError("identifier_columns must list exactly 4 columns (src ip, src port, dst ip, "
                      "dst port), got " + std::to_string(ids.size()));
  }
  std::copy(ids.begin(), ids.end(), s.identifier_columns.begin());
  s.label_column = cfg.require("label_column");
  s.class_names = split_list(cfg.require("class_names"));
  s.numeric_columns = split_list(cfg.get("numeric_columns").value_or(""));
  constexpr std::string_view kCat = "categorical.";
  for (const auto& [key, value] : cfg.entries()) {
    if (key.starts_with(kCat)) {
      s.categorical_columns.push_back({key.substr(kCat.size()), split_list(value)});
    }
  }
  s.validate();
  return s;
}

DatasetSchema DatasetSchema::load(const std::filesystem::path& path) {
  try {
    return from_config(KvConfig::load(path));
  } catch (const ConfigError& e) {
    throw SchemaError(e.what());
  }
}

void DatasetSchema::validate() const {
  if (class_names.empty()) throw SchemaError("class_names is empty");
  {
    std::set<std::string> seen;
    for (const auto& c : class_names) {
      if (c.empty()) throw SchemaError("empty class name");
      if (!seen.insert(c).second) throw SchemaError("duplicate class name '" + c + "'");
    }
  }
  std::set<std::string> used;
  auto claim = [&](const std::string& col, const char* role) {
    if (col.empty()) throw SchemaError(std::string("empty column name in ") + role);
    if (!used.insert(col).second) {
      throw SchemaError("column '" + col + "' assigned to more than one role", col);
    }
  };
  for (const auto& c : identifier_columns) claim(c, "identifier_columns");
  claim(label_column, "label_column");
  for (const auto& c : numeric_columns) claim(c, "numeric_columns");
  for (const auto& cat : categorical_columns) {
    claim(cat.name, "categorical columns");
    if (cat.vocabulary.empty()) {
      throw SchemaError("categorical column '" + cat.name + "' has an empty vocabulary", cat.name);
    }
    std::set<std::string> vocab(cat.vocabulary.begin(), cat.vocabulary.end());
    if (vocab.size() != cat.vocabulary.size()) {
      throw SchemaError("categorical column '" + cat.name + "' has duplicate vocabulary entries",
                        cat.name);
    }
  }
}

std::size_t DatasetSchema::feature_dim() const noexcept {
  std::size_t d = numeric_columns.size();
  for (const auto& c : categorical_columns) d += c.vocabulary.size() + 1;
  return d;
}

std::vector<std::size_t> DatasetSchema::numeric_positions() const {
  std::vector<std::size_t> p(numeric_columns.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
  return p;
}

std::optional<ClassId> DatasetSchema::class_id(std::string_view name) const {
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return static_cast<ClassId>(i);
  }
  return std::nullopt;
}

std::vector<std::string> DatasetSchema::feature_names() const {
  std::vector<std::string> out(numeric_columns);
  for (const auto& c : categorical_columns) {
    for (const auto& v : c.vocabulary) out.push_back(c.name + "=" + v);
    out.push_back(c.name + "=<other>");
  }
  return out;
}

// ---------------------------------------------------------------- parsing ---

namespace {

struct ColumnMap {
  std::array<std::size_t, 4> ids{};
  std::size_t label = 0;
  std::vector<std::size_t> numeric;
  std::vector<std::size_t> categorical;
  std::vector<std::unordered_map<std::string, std::size_t>> vocab_index;
  std::size_t width = 0;
};

ColumnMap map_columns(const std::vector<std::string>& header, const DatasetSchema& schema) {
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos.emplace(std::string(trim(header[i])), i);
  auto find = [&](const std::string& col) {
    auto it = pos.find(col);
    if (it == pos.end()) throw SchemaError("missing column '" + col + "' in CSV header", col);
    return it->second;
  };
  ColumnMap m;
  m.width = header.size();
  for (std::size_t i = 0; i < 4; ++i) m.ids[i] = find(schema.identifier_columns[i]);
  m.label = find(schema.label_column);
  for (const auto& c : schema.numeric_columns) m.numeric.push_back(find(c));
  for (const auto& c : schema.categorical_columns) {
    m.categorical.push_back(find(c.name));
    auto& idx = m.vocab_index.emplace_back();
    for (std::size_t v = 0; v < c.vocabulary.size(); ++v) idx.emplace(c.vocabulary[v], v);
  }
  return m;
}

std::uint16_t parse_port(std::string_view cell, std::size_t row, const std::string& column) {
  double v = 0.0;
  try {
    v = parse_double(cell);
  } catch (const std::invalid_argument&) {
    throw RowError(row, "column '" + column + "': unparseable port '" + std::string(cell) + "'");
  }
  if (v < 0.0 || v > 65535.0 || v != std::floor(v)) {
    throw RowError(row, "column '" + column + "': port out of range '" + std::string(cell) + "'");
  }
  return static_cast<std::uint16_t>(v);
}

FlowRecord encode_row(std::string_view line, std::size_t row, const ColumnMap& m,
                      const DatasetSchema& schema) {
  std::vector<std::string> cells;
  try {
    cells = csv::split_fields(line);
  } catch (const csv::CsvError& e) {
    throw RowError(row, e.what());
  }
  if (cells.size() != m.width) {
    throw RowError(row, "expected " + std::to_string(m.width) + " fields, found " +
                            std::to_string(cells.size()));
  }
  FlowRecord r;
  r.row_index = row;
  r.src_ip = trim(cells[m.ids[0]]);
  r.src_port = parse_port(cells[m.ids[1]], row, schema.identifier_columns[1]);
  r.dst_ip = trim(cells[m.ids[2]]);
  r.dst_port = parse_port(cells[m.ids[3]], row, schema.identifier_columns[3]);

  r.features.reserve(schema.feature_dim());
  for (std::size_t i = 0; i < m.numeric.size(); ++i) {
    const std::string_view cell = cells[m.numeric[i]];
    double v = 0.0;
    try {
      v = parse_double(cell);
    } catch (const std::invalid_argument&) {
      throw RowError(row, "column '" + schema.numeric_columns[i] + "': unparseable number '" +
                              std::string(cell) + "'");
    }
    if (!std::isfinite(v)) {
      throw RowError(row, "column '" + schema.numeric_columns[i] + "': non-finite value");
    }
    r.features.push_back(v);
  }
  for (std::size_t c = 0; c < m.categorical.size(); ++c) {
    const std::size_t block = schema.categorical_columns[c].vocabulary.size() + 1;
    const std::size_t base = r.features.size();
    r.features.resize(base + block, 0.0);
    auto it = m.vocab_index[c].find(std::string(trim(cells[m.categorical[c]])));
    r.features[base + (it == m.vocab_index[c].end() ? block - 1 : it->second)] = 1.0;
  }

  const std::string label(trim(cells[m.label]));
  auto id = schema.class_id(label);
  if (!id) throw LabelError(row, label);
  r.label = *id;
  return r;
}

}  // namespace

std::vector<FlowRecord> parse_csv_text(std::string_view text, const DatasetSchema& schema,
                                       ParseOptions opts) {
  std::vector<std::string_view> lines;
  try {
    lines = csv::split_records(text);
  } catch (const csv::CsvError& e) {
    throw IngestError(std::string("CSV: ") + e.what());
  }
  if (lines.empty()) throw SchemaError("CSV has no header row");
  const ColumnMap m = map_columns(csv::split_fields(lines[0]), schema);
  const std::size_t n = lines.size() - 1;

  std::vector<FlowRecord> out(n);
  if (!opts.parallel) {
    for (std::size_t i = 0; i < n; ++i) out[i] = encode_row(lines[i + 1], i, m, schema);
    return out;
  }

  // Errors are collected per row and the lowest row rethrown, so the failure
  // reported matches the sequential path.
  std::vector<std::exception_ptr> errors(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static, 256)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      out[i] = encode_row(lines[i + 1], i, m, schema);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<FlowRecord> parse_csv(const std::filesystem::path& path, const DatasetSchema& schema,
                                  ParseOptions opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  return parse_csv_text(text, schema, opts);
}

// ---------------------------------------------------------- normalization ---

NormStats normalize_fit(std::span<const FlowRecord> records,
                        std::span<const std::size_t> positions) {
  if (records.empty()) throw std::invalid_argument("normalize_fit: empty record list");
  NormStats s;
  s.positions.assign(positions.begin(), positions.end());
  const double n = static_cast<double>(records.size());
  for (std::size_t p : positions) {
    double sum = 0.0;
    for (const auto& r : records) sum += r.features.at(p);
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& r : records) {
      const double d = r.features[p] - mean;
      sq += d * d;
    }
    s.mean.push_back(mean);
    s.stddev.push_back(std::sqrt(sq / n));
  }
  return s;
}

std::vector<FlowRecord> normalize_apply(std::span<const FlowRecord> records,
                                        const NormStats& stats) {
  std::vector<FlowRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    for (std::size_t k = 0; k < stats.positions.size(); ++k) {
      const std::size_t p = stats.positions[k];
      if (p >= r.features.size()) {
        throw std::invalid_argument("normalize_apply: position " + std::to_string(p) +
                                    " outside feature vector of length " +
                                    std::to_string(r.features.size()));
      }
      r.features[p] = stats.stddev[k] == 0.0 ? 0.0 : (r.features[p] - stats.mean[k]) / stats.stddev[k];
    }
  }
  return out;
}

// ----------------------------------------------------------- stratification ---

namespace {

std::map<ClassId, std::vector<std::size_t>> indices_by_class(std::span<const FlowRecord> records) {
  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].label].push_back(i);
  return by_class;
}

void shuffle(std::vector<std::size_t>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.next_below(i)]);
  }
}

std::size_t stratum_take(double fraction, std::size_t n) {
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

std::vector<FlowRecord> stratified_sample(std::span<const FlowRecord> records, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("stratified_sample: fraction must lie in (0, 1]");
  }
  CounterRng rng(seed, "stratified_sample");
  std::vector<std::size_t> chosen;
  for (auto& [label, idx] : indices_by_class(records)) {
    shuffle(idx, rng);
    const std::size_t k = stratum_take(fraction, idx.size());
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<FlowRecord> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(records[i]);
  return out;
}

SplitMode parse_split_mode(std::string_view s) {
  if (s == "transductive") return SplitMode::transductive;
  if (s == "inductive") return SplitMode::inductive;
  throw std::invalid_argument("unknown mode '" + std::string(s) +
                              "' (expected transductive or inductive)");
}

std::string_view to_string(SplitMode m) noexcept {
  return m == SplitMode::transductive ? "transductive" : "inductive";
}

SplitResult stratified_split(std::span<const FlowRecord> records, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("stratified_split: train_fraction must lie in (0, 1)");
  }
  CounterRng rng(spec.seed, "stratified_split");
  SplitResult result;
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& [label, idx] : indices_by_class(records)) {
    if (idx.size() == 1) {
      result.warnings.push_back("class " + std::to_string(label) +
                                " has a single record; assigned to train");
    }
    shuffle(idx, rng);
    const std::size_t k = stratum_take(spec.train_fraction, idx.size());
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    test_idx.insert(test_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  for (std::size_t i : train_idx) result.train.push_back(records[i]);
  for (std::size_t i : test_idx) result.test.push_back(records[i]);
  return result;
}

std::vector<std::size_t> class_histogram(std::span<const FlowRecord> records,
                                         std::size_t class_count) {
  std::vector<std::size_t> h(class_count, 0);
  for (const auto& r : records) {
    if (r.label >= class_count) throw std::out_of_range("class_histogram: label out of range");
    ++h[r.label];
  }
  return h;
}

void write_encoded_csv(std::ostream& out, std::span<const FlowRecord> records,
                       const DatasetSchema& schema) {
  out << "row_index,src,dst,label";
  for (const auto& name : schema.feature_names()) out << ',' << csv::escape_field(name);
  out << '\n';
  out.precision(17);
  for (const auto& r : records) {
    out << r.row_index << ',' << csv::escape_field(r.src_ip + ":" + std::to_string(r.src_port))
        << ',' << csv::escape_field(r.dst_ip + ":" + std::to_string(r.dst_port)) << ','
        << schema.class_names.at(r.label);
    for (double v : r.features) out << ',' << v;
    out << '\n';
  }
}

}  // namespace edgmat
