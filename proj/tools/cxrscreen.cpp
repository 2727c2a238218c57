// Command-line entry point: catalog, split, run, report.

#include "commands.hpp"
#include "cxr/logging.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Chest X-ray transfer-learning experiments"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string root, catalog_out;
  auto* catalog = app.add_subcommand("catalog", "Index a corpus directory into a checksummed manifest");
  catalog->add_option("--root", root, "Corpus root with one subdirectory per class")->required();
  catalog->add_option("--out", catalog_out, "Manifest file to write")->required();

  std::string manifest, scheme = "THREE_CLASS", split_out;
  int k = 5;
  std::uint64_t seed = 0;
  double fraction = 0.10;
  auto* split = app.add_subcommand("split", "Stratified k-fold plan with per-fold counts");
  split->add_option("--manifest", manifest, "Manifest written by catalog")->required();
  split->add_option("--scheme", scheme, "TWO_CLASS or THREE_CLASS");
  split->add_option("--k", k, "Number of folds");
  split->add_option("--seed", seed, "Shuffle seed");
  split->add_option("--val-fraction", fraction, "Share of each training pool held out for validation");
  split->add_option("--out", split_out, "Split plan file to write")->required();

  std::string config;
  bool dry_run = false;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  run->add_flag("--dry-run", dry_run, "Print the planned stages and exit");

  std::vector<std::string> run_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Render tables and ROC plots from finished runs");
  report->add_option("--run-dir", run_dirs, "Run directory; repeat to put arms side by side")->required();
  report->add_option("--out", report_out, "Output directory (default: <first run>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : cxr::cli::kExitUsage;
  }
  cxr::set_log_level(log_level);

  if (*catalog) return cxr::cli::cmd_catalog(root, catalog_out, std::cout, std::cerr);
  if (*split) return cxr::cli::cmd_split(manifest, scheme, k, seed, fraction, split_out, std::cout, std::cerr);
  if (*run) return cxr::cli::cmd_run(config, dry_run, std::cout, std::cerr);
  std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
  return cxr::cli::cmd_report(dirs, report_out, std::cout, std::cerr);
}
