#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// K x K counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> labels);

  [[nodiscard]] std::size_t size() const { return labels_.size(); }
  [[nodiscard]] const std::vector<std::string>& labels() const { return labels_; }

  [[nodiscard]] std::int64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * size() + predicted];
  }
  std::int64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * size() + predicted]; }

  [[nodiscard]] std::int64_t total() const;
  [[nodiscard]] std::int64_t correct() const;
  [[nodiscard]] std::int64_t row_sum(std::size_t truth) const;
  [[nodiscard]] std::int64_t column_sum(std::size_t predicted) const;

  /// Element-wise sum; labels must match.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  static ConfusionMatrix from_rows(std::vector<std::string> labels,
                                   const std::vector<std::vector<std::int64_t>>& rows);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::int64_t> counts_;
};

/// Adds one count per (truth, prediction) pair of class indices. Throws
/// MetricsError on length mismatch or out-of-range indices, leaving `cm`
/// untouched.
ConfusionMatrix accumulate(ConfusionMatrix cm, std::span<const int> truth, std::span<const int> predicted);

/// One-vs-rest decomposition of a class.
struct ClassCounts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
};
ClassCounts class_counts(const ConfusionMatrix& cm, std::size_t cls);

/// The five per-class ratios. A zero denominator yields 0 and sets the
/// matching `degenerate` flag.
struct ClassMetric {
  double accuracy = 0, precision = 0, sensitivity = 0, f1 = 0, specificity = 0;
  bool degenerate = false;
};

struct ClassMetrics {
  std::vector<std::string> labels;
  std::vector<ClassMetric> per_class;
};

ClassMetrics per_class_metrics(const ConfusionMatrix& cm);

struct MetricSet {
  double accuracy = 0, precision = 0, sensitivity = 0, f1 = 0, specificity = 0;
};

/// `weighted` uses supports as weights, `macro` is the plain mean.
/// `overall_accuracy` is total correct / total; the result tables'
/// accuracy column is this quantity, which differs from the
/// support-weighted mean of per-class accuracy once K > 2.
struct AggregateMetrics {
  MetricSet weighted;
  MetricSet macro;
  double overall_accuracy = 0;
  std::vector<std::int64_t> supports;
};

AggregateMetrics aggregate(const ClassMetrics& metrics, std::span<const std::int64_t> supports);

/// Convenience: supports are the matrix row sums and overall accuracy is
/// taken from the matrix.
AggregateMetrics aggregate(const ConfusionMatrix& cm);

/// Percent with two decimals, ties rounded half-up: 0.99705 -> "99.71".
std::string format_percent(double ratio);

/// The columns of a result table, in order:
/// accuracy (overall), precision, sensitivity and F1 (support-weighted),
/// specificity (macro mean).
struct TableRow {
  double accuracy = 0, precision = 0, sensitivity = 0, f1 = 0, specificity = 0;
};
TableRow table_row(const AggregateMetrics& aggregate);

}  // namespace cxr
