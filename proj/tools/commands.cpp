#include "commands.hpp"

#include "cxr/augment.hpp"
#include "cxr/catalog.hpp"
#include "cxr/experiment.hpp"
#include "cxr/report.hpp"
#include "cxr/splits.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace cxr::cli {
namespace {

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return out.str();
}

void write_file(const fs::path& file, const std::string& content) {
  if (!file.parent_path().empty()) fs::create_directories(file.parent_path());
  std::ofstream(file, std::ios::binary) << content;
}

}  // namespace

int cmd_catalog(const fs::path& root, const fs::path& out, std::ostream& os, std::ostream& err) {
  IngestResult result;
  try {
    result = ingest_directory(root, detect_class_layout(root));
  } catch (const CatalogError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  write_manifest(result.manifest, out);
  write_integrity_report(result.report, out.string() + ".integrity.tsv");

  if (result.manifest.records.empty()) err << "warning: no images found under " << root.string() << "\n";
  for (const auto label : kAllLabels)
    os << std::left << std::setw(17) << to_string(label) << result.manifest.count(label) << "\n";
  os << std::left << std::setw(17) << "total" << result.manifest.records.size() << "\n";
  if (!result.report.empty())
    os << result.report.findings.size() << " integrity findings in " << out.string() << ".integrity.tsv\n";
  return kExitOk;
}

int cmd_split(const fs::path& manifest_file, const std::string& scheme_text, int k, std::uint64_t seed,
              double validation_fraction, const fs::path& out, std::ostream& os, std::ostream& err) {
  const auto scheme = parse_scheme(scheme_text);
  if (!scheme) {
    err << "error: unknown scheme " << scheme_text << "\n";
    return kExitUsage;
  }
  if (k < 2 || !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    err << "error: need k >= 2 and a validation fraction in (0, 1)\n";
    return kExitUsage;
  }
  SplitPlan plan;
  SplitCountTable table;
  try {
    const auto manifest = restrict_to_scheme(read_manifest(manifest_file), *scheme);
    plan = carve_validation(stratified_kfold(manifest, k, seed, *scheme), validation_fraction);
    table = split_counts(plan);
    AugmentationSpec spec;
    spec.seed = seed;
    for (int fold = 0; fold < k; ++fold) record_expansion(table, expand_training_fold(plan, fold, spec));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  write_split_plan(plan, out);
  const auto rendered = render_split_table(table);
  write_file(out.string() + ".counts.txt", rendered);
  os << rendered;
  return kExitOk;
}

int cmd_run(const fs::path& config_file, bool dry_run, std::ostream& os, std::ostream& err, fs::path* run_dir) {
  RunConfig config;
  try {
    config = read_run_config(config_file);
    config.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (dry_run) {
    const auto plan = plan_run(config, timestamp_now());
    os << "dry run, nothing written; would create " << plan.run_dir.string() << "\n";
    for (std::size_t i = 0; i < plan.stages.size(); ++i) os << "  " << (i + 1) << ". " << plan.stages[i] << "\n";
    return kExitOk;
  }

  RunOutcome outcome;
  try {
    outcome = run_experiment(config);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (run_dir != nullptr) *run_dir = outcome.run_dir;
  os << "run written to " << outcome.run_dir.string() << "\n";
  os << render_result_tables({outcome.report});
  if (!outcome.failed_backbones.empty()) {
    for (const auto& name : outcome.failed_backbones) err << "backbone failed: " << name << "\n";
    return kExitPartialFailure;
  }
  return kExitOk;
}

int cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out, std::ostream& os, std::ostream& err) {
  if (run_dirs.empty()) {
    err << "error: no run directory given\n";
    return kExitUsage;
  }
  bool ok = true;
  for (const auto& dir : run_dirs) {
    for (const auto& problem : validate_run(dir)) {
      err << "error: " << problem << "\n";
      ok = false;
    }
  }
  if (!ok) return kExitUsage;

  const auto target = out.empty() ? run_dirs.front() / "report" : out;
  try {
    const auto written = render_report(run_dirs, target);
    std::ifstream tables(written.front());
    os << tables.rdbuf();
    for (const auto& f : written) os << "wrote " << f.string() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace cxr::cli
