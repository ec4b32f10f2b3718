#include "edgmat/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <omp.h>

namespace edgmat {

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(c, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t) s += at(t, c);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

ConfusionMatrix confusion(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                          std::size_t classes) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(y_true.size()) + " labels vs " +
                                std::to_string(y_pred.size()) + " predictions");
  }
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= classes || y_pred[i] >= classes) {
      throw std::out_of_range("confusion: class id out of range at position " + std::to_string(i));
    }
  }
  ConfusionMatrix m(classes);
  // Integer tallies: per-thread partial matrices merge exactly in any order.
  const auto n = static_cast<std::ptrdiff_t>(y_true.size());
#pragma omp parallel if (y_true.size() > (1 << 16))
  {
    ConfusionMatrix local(classes);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) ++local.at(y_true[i], y_pred[i]);
#pragma omp critical
    for (std::size_t t = 0; t < classes; ++t) {
      for (std::size_t p = 0; p < classes; ++p) m.at(t, p) += local.at(t, p);
    }
  }
  return m;
}

std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& m) {
  auto ratio = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
  std::vector<ClassMetrics> out(m.classes());
  for (std::size_t c = 0; c < m.classes(); ++c) {
    const double tp = static_cast<double>(m.at(c, c));
    auto& r = out[c];
    r.precision = ratio(tp, static_cast<double>(m.col_sum(c)));
    r.recall = ratio(tp, static_cast<double>(m.row_sum(c)));
    r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  }
  return out;
}

EvalReport weighted_report(std::span<const ClassMetrics> per_class,
                           std::span<const std::uint64_t> supports,
                           std::vector<std::string> class_names) {
  if (per_class.size() != supports.size()) {
    throw std::invalid_argument("weighted_report: metrics and supports differ in length");
  }
  std::uint64_t total = 0;
  for (auto s : supports) total += s;
  if (total == 0) throw std::invalid_argument("weighted_report: total support is zero");

  EvalReport r;
  r.per_class.assign(per_class.begin(), per_class.end());
  r.support.assign(supports.begin(), supports.end());
  r.total = total;
  if (class_names.empty()) {
    for (std::size_t c = 0; c < per_class.size(); ++c) class_names.push_back(std::to_string(c));
  }
  r.class_names = std::move(class_names);
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const double w = static_cast<double>(supports[c]) / static_cast<double>(total);
    r.weighted.precision += w * per_class[c].precision;
    r.weighted.recall += w * per_class[c].recall;
    r.weighted.f1 += w * per_class[c].f1;
  }
  return r;
}

EvalReport evaluate_predictions(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                                std::vector<std::string> class_names) {
  const std::size_t classes = class_names.size();
  ConfusionMatrix m = confusion(y_true, y_pred, classes);
  std::vector<std::uint64_t> support(classes);
  for (std::size_t c = 0; c < classes; ++c) support[c] = m.row_sum(c);
  EvalReport r = weighted_report(per_class_metrics(m), support, std::move(class_names));
  r.matrix = std::move(m);
  return r;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  std::size_t width = std::string_view("Weighted Average").size();
  for (const auto& n : report.class_names) width = std::max(width, n.size());
  char buf[256];
  auto line = [&](const std::string& name, const ClassMetrics& m, const std::string& support) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.2f%%  %9.2f%%  %8.4f  %10s\n", static_cast<int>(width),
                  name.c_str(), 100.0 * m.precision, 100.0 * m.recall, m.f1, support.c_str());
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-*s  %10s  %10s  %8s  %10s\n", static_cast<int>(width),
                "Class Name", "Precision", "Recall", "F1-Score", "Support");
  out << buf;
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    line(report.class_names[c], report.per_class[c], std::to_string(report.support[c]));
  }
  line("Weighted Average", report.weighted, std::to_string(report.total));
}

void write_report_kv(std::ostream& out, const EvalReport& report) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "classes = " << report.per_class.size() << '\n';
  out << "total = " << report.total << '\n';
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const std::string k = "class." + report.class_names[c] + ".";
    out << k << "precision = " << num(report.per_class[c].precision) << '\n';
    out << k << "recall = " << num(report.per_class[c].recall) << '\n';
    out << k << "f1 = " << num(report.per_class[c].f1) << '\n';
    out << k << "support = " << report.support[c] << '\n';
  }
  out << "weighted.precision = " << num(report.weighted.precision) << '\n';
  out << "weighted.recall = " << num(report.weighted.recall) << '\n';
  out << "weighted.f1 = " << num(report.weighted.f1) << '\n';
  const std::size_t c = report.matrix.classes();
  for (std::size_t t = 0; t < c; ++t) {
    out << "confusion." << t << " =";
    for (std::size_t p = 0; p < c; ++p) out << (p ? ", " : " ") << report.matrix.at(t, p);
    out << '\n';
  }
}

}  // namespace edgmat
