#pragma once

#include "cxr/roc.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative path ('/'-separated) -> SHA-256 of every regular file under
/// `dir`, skipping the relative paths in `exclude`.
std::map<std::string, std::string> checksum_tree(const std::filesystem::path& dir,
                                                 const std::set<std::string>& exclude = {});

/// Problems with a finished run directory, one line each: missing or
/// unparsable report/report.json, listed files that are gone or whose
/// checksum changed, referenced files the report does not list. Empty when
/// the run is intact.
std::vector<std::string> validate_run(const std::filesystem::path& run_dir);

/// report/report.json of a run that passes validate_run; ReportError
/// (carrying the first problem) otherwise.
nlohmann::json load_run_report(const std::filesystem::path& run_dir);

/// Result tables in the usual column order (Accuracy, Precision,
/// Sensitivity, F1, Specificity), one block per scheme with the
/// without/with-augmentation arms side by side, followed by the weighted and
/// macro aggregates of every arm.
std::string render_result_tables(const std::vector<nlohmann::json>& reports);

struct RocSeries {
  std::string name;
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Line plot of several ROC curves with the chance diagonal and a legend.
void plot_roc(const std::vector<RocSeries>& series, const std::string& title, const std::filesystem::path& png);

/// Reads "fpr\ttpr" files written by write_roc_tsv.
std::vector<RocPoint> read_roc_tsv(const std::filesystem::path& file);

/// Validates every run, writes `<out>/tables.txt` and one ROC plot per
/// (run, class) comparing the run's backbones. Returns the files written.
std::vector<std::filesystem::path> render_report(const std::vector<std::filesystem::path>& run_dirs,
                                                 const std::filesystem::path& out_dir);

}  // namespace cxr
