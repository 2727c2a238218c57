#pragma once

// The cxrscreen subcommands as functions, so tests can drive them without
// spawning a process. Each returns the process exit code.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cxr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitUsage = 2;

/// Ingests `root` and writes the manifest to `out` plus the integrity
/// report to `<out>.integrity.tsv`. Prints per-class counts.
int cmd_catalog(const std::filesystem::path& root, const std::filesystem::path& out, std::ostream& os,
                std::ostream& err);

/// Writes the split plan to `out` and the per-fold count table (with the
/// default augmentation expansion) to `<out>.counts.txt`, echoing the table.
int cmd_split(const std::filesystem::path& manifest, const std::string& scheme, int k, std::uint64_t seed,
              double validation_fraction, const std::filesystem::path& out, std::ostream& os, std::ostream& err);

/// Runs the configured experiment. With `dry_run` only the plan is printed.
/// `run_dir`, when given, receives the directory that was written.
int cmd_run(const std::filesystem::path& config, bool dry_run, std::ostream& os, std::ostream& err,
            std::filesystem::path* run_dir = nullptr);

/// Validates the runs and renders tables and ROC plots into `out`
/// (default: `<first run>/report`).
int cmd_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out,
               std::ostream& os, std::ostream& err);

}  // namespace cxr::cli
