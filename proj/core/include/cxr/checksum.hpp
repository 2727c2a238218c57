#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace cxr {

/// Lower-case hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);

/// SHA-256 of a file's raw bytes. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& file);

}  // namespace cxr
