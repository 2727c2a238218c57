#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cxr {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

/// Starts at (0, 0), ends at (1, 1), both coordinates non-decreasing.
struct RocCurve {
  std::string positive_class;
  std::vector<RocPoint> points;
  double auc = 0.0;
  friend bool operator==(const RocCurve&, const RocCurve&) = default;
};

/// One-vs-rest ROC for class index `positive_class`: thresholds sweep the
/// distinct scores from high to low, tied scores enter together, and the
/// trapezoidal area is accumulated in integer arithmetic (so it equals the
/// pairwise concordance with ties counted half). Throws MetricsError if
/// the labels contain only positives or only negatives.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels, int positive_class,
                   std::string positive_name = {});

struct MulticlassRoc {
  std::vector<RocCurve> per_class;  ///< classes absent from the labels are omitted
  std::optional<RocCurve> micro;    ///< pooled over all (sample, class) pairs
};

/// `scores` is row-major n x K (one probability vector per sample).
MulticlassRoc multiclass_roc(std::span<const double> scores, std::span<const int> labels,
                             const std::vector<std::string>& class_names);

/// "fpr\ttpr" lines with a header row.
void write_roc_tsv(const RocCurve& curve, const std::filesystem::path& file);

}  // namespace cxr
