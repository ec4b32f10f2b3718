#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "edgmat/flow_ingest.hpp"

namespace edgmat {

/// C x C counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes) {}

  std::size_t classes() const noexcept { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_.at(truth * classes_ + pred); }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_.at(truth * classes_ + pred); }
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;
  std::uint64_t total() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                          std::size_t classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// 0/0 is reported as 0 for every metric.
std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& m);

struct EvalReport {
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> per_class;
  std::vector<std::uint64_t> support;
  ClassMetrics weighted;
  std::uint64_t total = 0;
  ConfusionMatrix matrix;
};

/// Support-weighted averages: sum_c (support_c / total) * metric_c.
EvalReport weighted_report(std::span<const ClassMetrics> per_class,
                           std::span<const std::uint64_t> supports,
                           std::vector<std::string> class_names = {});

EvalReport evaluate_predictions(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                                std::vector<std::string> class_names);

/// Class name, precision %, recall %, F1, with a trailing "Weighted Average" row.
void write_report_table(std::ostream& out, const EvalReport& report);
/// Machine-readable `key = value` form.
void write_report_kv(std::ostream& out, const EvalReport& report);

}  // namespace edgmat
