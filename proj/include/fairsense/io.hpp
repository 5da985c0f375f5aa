#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fairsense {

// Writes `contents` to a sibling temp file and renames it over `path`, so a
// failed write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace fairsense
