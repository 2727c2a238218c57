#include "cxr/catalog.hpp"

#include "cxr/checksum.hpp"
#include "cxr/random.hpp"
#include "cxr/raster.hpp"
#include "io_util.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cxr {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestHeader =
    "record_id\tpath\tlabel\tchecksum\twidth\theight\tsource_tag";

bool has_image_extension(const fs::path& file) {
  auto ext = file.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

bool tsv_safe(std::string_view s) {
  return s.find_first_of("\t\r\n") == std::string_view::npos;
}

std::string record_id_for(const std::string& checksum) { return "img-" + checksum.substr(0, 16); }

struct Candidate {
  std::string relative;
  Label label;
  std::string source_tag;
};

}  // namespace

std::map<Label, std::size_t> Manifest::class_counts() const {
  std::map<Label, std::size_t> counts;
  for (const auto label : kAllLabels) counts[label] = 0;
  for (const auto& r : records) ++counts[r.label];
  return counts;
}

std::size_t Manifest::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [label](const ImageRecord& r) { return r.label == label; }));
}

const ImageRecord* Manifest::find(const std::string& record_id) const {
  const auto it = std::find_if(records.begin(), records.end(),
                               [&](const ImageRecord& r) { return r.record_id == record_id; });
  return it == records.end() ? nullptr : &*it;
}

fs::path Manifest::resolve(const ImageRecord& record) const { return root / fs::path(record.path); }

std::size_t IntegrityReport::count(std::string_view code) const {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(),
                                                [code](const Finding& f) { return f.code == code; }));
}

ClassLayout default_class_layout() {
  return {
      {"covid", Label::Covid19},  {"COVID-19", Label::Covid19},
      {"covid19", Label::Covid19}, {"normal", Label::Normal},
      {"NORMAL", Label::Normal},  {"viral", Label::ViralPneumonia},
      {"Viral Pneumonia", Label::ViralPneumonia},
      {"viral_pneumonia", Label::ViralPneumonia},
  };
}

ClassLayout detect_class_layout(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw CatalogError("unreadable corpus root: " + root.string());
  ClassLayout out;
  for (const auto& [subdir, label] : default_class_layout())
    if (fs::is_directory(root / subdir, ec)) out.emplace(subdir, label);
  return out;
}

IngestResult ingest_directory(const fs::path& root, const ClassLayout& layout) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw CatalogError("unreadable corpus root: " + root.string());

  IngestResult result;
  auto& report = result.report;
  std::vector<Candidate> candidates;
  std::map<Label, std::size_t> candidates_per_label;

  for (const auto& [subdir, label] : layout) {
    const auto dir = root / subdir;
    if (!fs::is_directory(dir, ec)) throw CatalogError("missing class directory: " + dir.string());
    candidates_per_label[label] += 0;
    for (auto it = fs::recursive_directory_iterator(dir, ec); !ec && it != fs::end(it);
         it.increment(ec)) {
      if (!it->is_regular_file()) continue;
      const auto relative = fs::relative(it->path(), root).generic_string();
      if (!has_image_extension(it->path()) || !tsv_safe(relative)) {
        spdlog::info("skipping non-image file {}", relative);
        report.findings.push_back({Severity::Info, "-", std::string(finding_code::kSkipped), relative});
        continue;
      }
      candidates.push_back({relative, label, subdir});
    }
    if (ec) throw CatalogError("cannot walk " + dir.string() + ": " + ec.message());
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.relative < b.relative; });

  std::unordered_map<std::string, std::string> seen;  // checksum -> first path
  for (const auto& c : candidates) {
    std::vector<std::byte> bytes;
    try {
      bytes = read_file_bytes(root / fs::path(c.relative));
    } catch (const std::exception& e) {
      report.findings.push_back({Severity::Error, "-", std::string(finding_code::kUndecodable),
                                 c.relative + ": " + e.what()});
      continue;
    }
    const auto checksum = sha256_hex(bytes);
    if (const auto it = seen.find(checksum); it != seen.end()) {
      spdlog::warn("{} duplicates {}; excluded", c.relative, it->second);
      report.findings.push_back({Severity::Warning, record_id_for(checksum),
                                 std::string(finding_code::kDuplicate),
                                 c.relative + " duplicates " + it->second});
      continue;
    }
    Raster raster;
    try {
      raster = decode_raster(bytes);
    } catch (const DecodeError& e) {
      spdlog::warn("cannot decode {}: {}", c.relative, e.what());
      report.findings.push_back({Severity::Error, "-", std::string(finding_code::kUndecodable),
                                 c.relative + ": " + e.what()});
      continue;
    }
    seen.emplace(checksum, c.relative);
    result.manifest.records.push_back({record_id_for(checksum), c.relative, c.label, checksum,
                                       raster.width, raster.height, c.source_tag});
    ++candidates_per_label[c.label];
  }

  for (const auto& [label, n] : candidates_per_label) {
    if (n == 0) {
      spdlog::warn("no images found for class {}", to_string(label));
      report.findings.push_back({Severity::Warning, "-", std::string(finding_code::kEmptyClass),
                                 std::string(to_string(label))});
    }
  }

  result.manifest.root = fs::absolute(root).lexically_normal();
  result.manifest.created_at = detail::utc_timestamp();
  return result;
}

IntegrityReport verify_manifest(const Manifest& manifest) {
  IntegrityReport report;
  for (const auto& record : manifest.records) {
    const auto file = manifest.resolve(record);
    std::error_code ec;
    if (!fs::is_regular_file(file, ec)) {
      report.findings.push_back({Severity::Error, record.record_id,
                                 std::string(finding_code::kMissingFile), record.path});
      continue;
    }
    std::vector<std::byte> bytes;
    try {
      bytes = read_file_bytes(file);
    } catch (const std::exception& e) {
      report.findings.push_back({Severity::Error, record.record_id,
                                 std::string(finding_code::kMissingFile), e.what()});
      continue;
    }
    const auto actual = sha256_hex(bytes);
    if (actual != record.checksum) {
      report.findings.push_back({Severity::Error, record.record_id,
                                 std::string(finding_code::kChecksumDrift),
                                 record.path + " expected " + record.checksum + " got " + actual});
      continue;
    }
    try {
      (void)decode_raster(bytes);
    } catch (const DecodeError& e) {
      report.findings.push_back({Severity::Error, record.record_id,
                                 std::string(finding_code::kUndecodable), e.what()});
    }
  }
  return report;
}

Manifest balance_subsample(const Manifest& manifest, std::size_t per_class_count,
                           std::uint64_t seed) {
  std::map<Label, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < manifest.records.size(); ++i)
    by_label[manifest.records[i].label].push_back(i);

  std::vector<std::size_t> keep;
  for (auto& [label, indices] : by_label) {
    if (indices.size() < per_class_count) {
      throw CatalogError("class " + std::string(to_string(label)) + " has only " +
                         std::to_string(indices.size()) + " records; cannot draw " +
                         std::to_string(per_class_count));
    }
    if (indices.size() > per_class_count) {
      Rng rng(derive_seed(seed, {"balance", to_string(label)}));
      rng.shuffle(std::span(indices));
      indices.resize(per_class_count);
    }
    keep.insert(keep.end(), indices.begin(), indices.end());
  }
  std::sort(keep.begin(), keep.end());  // manifest order is path order

  Manifest out = manifest;
  out.records.clear();
  for (const auto i : keep) out.records.push_back(manifest.records[i]);
  return out;
}

Manifest restrict_to_scheme(const Manifest& manifest, Scheme scheme) {
  Manifest out = manifest;
  out.records.clear();
  for (const auto& r : manifest.records)
    if (class_index(scheme, r.label)) out.records.push_back(r);
  return out;
}

std::string manifest_tsv(const Manifest& manifest) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : manifest.records) {
    out << r.record_id << '\t' << r.path << '\t' << to_string(r.label) << '\t' << r.checksum
        << '\t' << r.width << '\t' << r.height << '\t' << r.source_tag << '\n';
  }
  return out.str();
}

void write_manifest(const Manifest& manifest, const fs::path& file) {
  detail::write_text_file(file, manifest_tsv(manifest));
  nlohmann::ordered_json meta;
  meta["schema_version"] = manifest.schema_version;
  meta["root"] = manifest.root.string();
  meta["created_at"] = manifest.created_at;
  auto& counts = meta["class_counts"];
  counts = nlohmann::ordered_json::object();
  for (const auto& [label, n] : manifest.class_counts()) counts[std::string(to_string(label))] = n;
  auto meta_file = file;
  meta_file += ".meta.json";
  detail::write_text_file(meta_file, meta.dump(2) + "\n");
}

Manifest read_manifest(const fs::path& file) {
  const auto lines = detail::read_lines(file);
  if (lines.empty() || lines.front() != kManifestHeader)
    throw CatalogError("not a manifest file (bad header): " + file.string());

  Manifest manifest;
  manifest.root = file.parent_path();
  auto meta_file = file;
  meta_file += ".meta.json";
  if (fs::exists(meta_file)) {
    const auto meta = nlohmann::json::parse(detail::read_text_file(meta_file));
    manifest.root = meta.value("root", manifest.root.string());
    manifest.created_at = meta.value("created_at", "");
    manifest.schema_version = meta.value("schema_version", Manifest::kSchemaVersion);
  }

  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> checksums;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    const auto fields = detail::split(lines[n], '\t');
    const auto where = file.string() + ":" + std::to_string(n + 1);
    if (fields.size() != 7) throw CatalogError(where + ": expected 7 fields");
    const auto label = parse_label(fields[2]);
    if (!label) throw CatalogError(where + ": unknown label '" + fields[2] + "'");
    ImageRecord r{fields[0], fields[1], *label, fields[3], 0, 0, fields[6]};
    try {
      r.width = std::stoi(fields[4]);
      r.height = std::stoi(fields[5]);
    } catch (const std::exception&) {
      throw CatalogError(where + ": bad image dimensions");
    }
    if (r.width < 1 || r.height < 1) throw CatalogError(where + ": bad image dimensions");
    if (!ids.insert(r.record_id).second) throw CatalogError(where + ": duplicate record_id");
    if (!checksums.insert(r.checksum).second) throw CatalogError(where + ": duplicate checksum");
    manifest.records.push_back(std::move(r));
  }
  if (!std::is_sorted(manifest.records.begin(), manifest.records.end(),
                      [](const ImageRecord& a, const ImageRecord& b) { return a.path < b.path; }))
    throw CatalogError(file.string() + ": rows are not sorted by path");
  return manifest;
}

std::string_view to_string(Severity severity) {
  switch (severity) {
    case Severity::Info: return "INFO";
    case Severity::Warning: return "WARNING";
    case Severity::Error: return "ERROR";
  }
  return "ERROR";
}

void write_integrity_report(const IntegrityReport& report, const fs::path& file) {
  std::ostringstream out;
  for (const auto& f : report.findings) {
    std::string detail = f.detail;
    std::replace_if(detail.begin(), detail.end(), [](char c) { return c == '\t' || c == '\n'; }, ' ');
    out << to_string(f.severity) << '\t' << f.record_id << '\t' << f.code << '\t' << detail << '\n';
  }
  detail::write_text_file(file, out.str());
}

IntegrityReport read_integrity_report(const fs::path& file) {
  IntegrityReport report;
  for (const auto& line : detail::read_lines(file)) {
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 4) throw CatalogError("malformed integrity report line: " + line);
    Severity severity = Severity::Error;
    if (fields[0] == "INFO") severity = Severity::Info;
    else if (fields[0] == "WARNING") severity = Severity::Warning;
    report.findings.push_back({severity, fields[1], fields[2], fields[3]});
  }
  return report;
}

}  // namespace cxr
