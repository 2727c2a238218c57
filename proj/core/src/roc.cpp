#include "cxr/roc.hpp"

#include "cxr/metrics.hpp"
#include "io_util.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>
#include <sstream>

namespace cxr {

namespace {

RocCurve sweep(std::span<const double> scores, const std::vector<bool>& positive, std::string name) {
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::int64_t>(std::count(positive.begin(), positive.end(), true));
  const auto n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw MetricsError("ROC needs at least one positive and one negative sample");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.positive_class = std::move(name);
  curve.points.push_back({0.0, 0.0});
  std::int64_t tp = 0, fp = 0;
  // Twice the area times n_pos * n_neg, kept exact.
  std::int64_t twice_area = 0;
  for (std::size_t i = 0; i < n;) {
    const double threshold = scores[order[i]];
    const auto prev_tp = tp, prev_fp = fp;
    for (; i < n && scores[order[i]] == threshold; ++i) (positive[order[i]] ? tp : fp) += 1;
    twice_area += (fp - prev_fp) * (tp + prev_tp);
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  curve.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  return curve;
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels, int positive_class,
                   std::string positive_name) {
  if (scores.size() != labels.size()) throw MetricsError("scores and labels differ in length");
  std::vector<bool> positive(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) positive[i] = labels[i] == positive_class;
  if (positive_name.empty()) positive_name = std::to_string(positive_class);
  return sweep(scores, positive, std::move(positive_name));
}

MulticlassRoc multiclass_roc(std::span<const double> scores, std::span<const int> labels,
                             const std::vector<std::string>& class_names) {
  const std::size_t k = class_names.size();
  if (k < 2) throw MetricsError("multiclass ROC needs at least two classes");
  if (scores.size() != labels.size() * k) throw MetricsError("score matrix does not match n x K");

  MulticlassRoc out;
  std::vector<double> column(labels.size());
  for (std::size_t c = 0; c < k; ++c) {
    const auto present = std::count(labels.begin(), labels.end(), static_cast<int>(c));
    if (present == 0 || present == static_cast<std::ptrdiff_t>(labels.size())) {
      spdlog::warn("class {} has no one-vs-rest contrast in the labels; ROC omitted", class_names[c]);
      continue;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) column[i] = scores[i * k + c];
    out.per_class.push_back(roc_curve(column, labels, static_cast<int>(c), class_names[c]));
  }

  std::vector<double> pooled(scores.begin(), scores.end());
  std::vector<bool> positive(scores.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t c = 0; c < k; ++c) positive[i * k + c] = labels[i] == static_cast<int>(c);
  try {
    out.micro = sweep(pooled, positive, "micro");
  } catch (const MetricsError&) {
    out.micro.reset();
  }
  return out;
}

void write_roc_tsv(const RocCurve& curve, const std::filesystem::path& file) {
  std::ostringstream out;
  out << "fpr\ttpr\n";
  for (const auto& p : curve.points) out << detail::fixed(p.fpr, 10) << '\t' << detail::fixed(p.tpr, 10) << '\n';
  detail::write_text_file(file, out.str());
}

}  // namespace cxr
