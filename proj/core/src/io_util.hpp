#pragma once

// Small text-file helpers shared by the core sources. Not installed.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cxr::detail {

std::vector<std::string> split(std::string_view line, char sep);
std::vector<std::string> read_lines(const std::filesystem::path& file);
std::string read_text_file(const std::filesystem::path& file);

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
void write_text_file(const std::filesystem::path& file, std::string_view content);

std::string utc_timestamp();          ///< 2026-01-31T12:00:00Z
std::string compact_utc_timestamp();  ///< 20260131T120000Z

/// "%.<digits>f"-style formatting through the C locale.
std::string fixed(double value, int digits);

}  // namespace cxr::detail
