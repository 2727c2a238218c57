#include "cxr/metrics.hpp"

#include "io_util.hpp"

#include <cmath>
#include <numeric>

namespace cxr {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::correct() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += at(i, i);
  return n;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::int64_t n = 0;
  for (std::size_t j = 0; j < size(); ++j) n += at(truth, j);
  return n;
}

std::int64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += at(i, predicted);
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.labels_ != labels_) throw MetricsError("cannot add confusion matrices with different labels");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix ConfusionMatrix::from_rows(std::vector<std::string> labels,
                                           const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix cm(std::move(labels));
  if (rows.size() != cm.size()) throw MetricsError("row count does not match label count");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cm.size()) throw MetricsError("ragged confusion matrix");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      if (rows[i][j] < 0) throw MetricsError("negative confusion count");
      cm.at(i, j) = rows[i][j];
    }
  }
  return cm;
}

ConfusionMatrix accumulate(ConfusionMatrix cm, std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw MetricsError("label streams differ in length");
  const auto k = static_cast<int>(cm.size());
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (truth[n] < 0 || truth[n] >= k || predicted[n] < 0 || predicted[n] >= k)
      throw MetricsError("label index outside the confusion matrix at position " + std::to_string(n));
  }
  for (std::size_t n = 0; n < truth.size(); ++n)
    ++cm.at(static_cast<std::size_t>(truth[n]), static_cast<std::size_t>(predicted[n]));
  return cm;
}

ClassCounts class_counts(const ConfusionMatrix& cm, std::size_t cls) {
  ClassCounts c;
  c.tp = cm.at(cls, cls);
  c.fn = cm.row_sum(cls) - c.tp;
  c.fp = cm.column_sum(cls) - c.tp;
  c.tn = cm.total() - c.tp - c.fn - c.fp;
  return c;
}

namespace {

double ratio(std::int64_t num, std::int64_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

// Half-up at the second decimal of a percentage. The small epsilon absorbs
// binary representation error so 99.705 (stored as 99.70499...) rounds up.
double round_half_up_2(double percent) { return std::floor(percent * 100.0 + 0.5 + 1e-9) / 100.0; }

}  // namespace

ClassMetrics per_class_metrics(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw MetricsError("confusion matrix is empty");
  ClassMetrics out;
  out.labels = cm.labels();
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const auto c = class_counts(cm, i);
    ClassMetric m;
    m.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn, m.degenerate);
    m.precision = ratio(c.tp, c.tp + c.fp, m.degenerate);
    m.sensitivity = ratio(c.tp, c.tp + c.fn, m.degenerate);
    m.specificity = ratio(c.tn, c.tn + c.fp, m.degenerate);
    if (m.precision + m.sensitivity > 0.0) {
      m.f1 = 2.0 * m.precision * m.sensitivity / (m.precision + m.sensitivity);
    } else {
      m.f1 = 0.0;
      m.degenerate = true;
    }
    out.per_class.push_back(m);
  }
  return out;
}

AggregateMetrics aggregate(const ClassMetrics& metrics, std::span<const std::int64_t> supports) {
  if (supports.size() != metrics.per_class.size()) throw MetricsError("supports do not align with classes");
  AggregateMetrics out;
  out.supports.assign(supports.begin(), supports.end());
  const double total = static_cast<double>(std::accumulate(supports.begin(), supports.end(), std::int64_t{0}));
  if (total <= 0.0) throw MetricsError("supports must be positive");
  const double k = static_cast<double>(metrics.per_class.size());
  double correct = 0.0;
  for (std::size_t i = 0; i < metrics.per_class.size(); ++i) {
    const auto& m = metrics.per_class[i];
    const double w = static_cast<double>(supports[i]) / total;
    out.weighted.accuracy += w * m.accuracy;
    out.weighted.precision += w * m.precision;
    out.weighted.sensitivity += w * m.sensitivity;
    out.weighted.f1 += w * m.f1;
    out.weighted.specificity += w * m.specificity;
    out.macro.accuracy += m.accuracy / k;
    out.macro.precision += m.precision / k;
    out.macro.sensitivity += m.sensitivity / k;
    out.macro.f1 += m.f1 / k;
    out.macro.specificity += m.specificity / k;
    correct += m.sensitivity * static_cast<double>(supports[i]);
  }
  // sensitivity_i * support_i = TP_i, so this is total correct / total.
  out.overall_accuracy = correct / total;
  return out;
}

AggregateMetrics aggregate(const ConfusionMatrix& cm) {
  std::vector<std::int64_t> supports;
  for (std::size_t i = 0; i < cm.size(); ++i) supports.push_back(cm.row_sum(i));
  auto out = aggregate(per_class_metrics(cm), supports);
  out.overall_accuracy = static_cast<double>(cm.correct()) / static_cast<double>(cm.total());
  return out;
}

std::string format_percent(double value) {
  return detail::fixed(round_half_up_2(value * 100.0), 2);
}

TableRow table_row(const AggregateMetrics& a) {
  return {a.overall_accuracy, a.weighted.precision, a.weighted.sensitivity, a.weighted.f1,
          a.macro.specificity};
}

}  // namespace cxr
