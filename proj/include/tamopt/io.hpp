#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tamopt {

/// "%.17g": round-trips every finite double exactly.
std::string format_double(double v);

/// Splits on `sep` without any quoting rules.
std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

/// Strict numeric parsing; throws std::invalid_argument naming the text.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

/// Writes `contents` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace tamopt
