#pragma once

#include "cxr/labels.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cxr {

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImageRecord {
  std::string record_id;
  std::string path;  ///< relative to the manifest root, '/'-separated
  Label label = Label::Normal;
  std::string checksum;  ///< SHA-256 of the raw file bytes, lower-case hex
  int width = 0;
  int height = 0;
  std::string source_tag;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Ordered, checksummed image catalog. Records are kept sorted by path.
struct Manifest {
  static constexpr int kSchemaVersion = 1;

  std::filesystem::path root;
  std::vector<ImageRecord> records;
  std::string created_at;  ///< ISO-8601 UTC, informational only
  int schema_version = kSchemaVersion;

  /// Per-label totals, recomputed from `records`.
  [[nodiscard]] std::map<Label, std::size_t> class_counts() const;
  [[nodiscard]] std::size_t count(Label label) const;
  [[nodiscard]] const ImageRecord* find(const std::string& record_id) const;
  [[nodiscard]] std::filesystem::path resolve(const ImageRecord& record) const;
};

enum class Severity { Info, Warning, Error };

struct Finding {
  Severity severity = Severity::Error;
  std::string record_id;  ///< "-" when the finding is not tied to a record
  std::string code;
  std::string detail;

  friend bool operator==(const Finding&, const Finding&) = default;
};

/// Problems found during ingest or verification, one line each on disk.
struct IntegrityReport {
  std::vector<Finding> findings;

  [[nodiscard]] bool empty() const { return findings.empty(); }
  [[nodiscard]] std::size_t count(std::string_view code) const;
};

namespace finding_code {
inline constexpr std::string_view kMissingFile = "MISSING_FILE";
inline constexpr std::string_view kChecksumDrift = "CHECKSUM_DRIFT";
inline constexpr std::string_view kUndecodable = "UNDECODABLE";
inline constexpr std::string_view kDuplicate = "DUPLICATE_CONTENT";
inline constexpr std::string_view kSkipped = "SKIPPED_NON_IMAGE";
inline constexpr std::string_view kEmptyClass = "EMPTY_CLASS";
}  // namespace finding_code

struct IngestResult {
  Manifest manifest;
  IntegrityReport report;
};

using ClassLayout = std::map<std::string, Label>;

/// Subdirectory names understood when no explicit layout is given.
ClassLayout default_class_layout();

/// The entries of default_class_layout() that exist under `root`. Throws
/// CatalogError if `root` is not a readable directory.
ClassLayout detect_class_layout(const std::filesystem::path& root);

/// Walks each mapped subdirectory of `root` recursively and catalogs every
/// decodable PNG/JPEG file. Undecodable and duplicate-content files are
/// excluded and listed in the report; the first occurrence in path order
/// wins a duplicate. Throws CatalogError if `root` or a mapped subdirectory
/// is missing.
IngestResult ingest_directory(const std::filesystem::path& root, const ClassLayout& layout);

/// Re-hashes and re-decodes every record. The report is empty iff the
/// corpus still matches the manifest.
IntegrityReport verify_manifest(const Manifest& manifest);

/// Uniform random subset of exactly `per_class_count` records per class
/// present in the manifest, determined only by (manifest, count, seed).
Manifest balance_subsample(const Manifest& manifest, std::size_t per_class_count,
                           std::uint64_t seed);

/// Keeps only the classes belonging to `scheme`.
Manifest restrict_to_scheme(const Manifest& manifest, Scheme scheme);

// Persistence: the manifest itself is a TSV; root, timestamp and schema
// version go to a JSON sidecar "<file>.meta.json".
void write_manifest(const Manifest& manifest, const std::filesystem::path& file);
Manifest read_manifest(const std::filesystem::path& file);
std::string manifest_tsv(const Manifest& manifest);

std::string_view to_string(Severity severity);
void write_integrity_report(const IntegrityReport& report, const std::filesystem::path& file);
IntegrityReport read_integrity_report(const std::filesystem::path& file);

}  // namespace cxr
