#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace equicalib::csv {

/// Shortest decimal that round-trips to the same double; "NA" for nullopt.
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

/// Split one line on commas (no quoting: the toolkit never writes quoted fields).
std::vector<std::string> split(std::string_view line);

double parse_number(std::string_view field, std::string_view what);
std::optional<double> parse_optional(std::string_view field, std::string_view what);
long long parse_integer(std::string_view field, std::string_view what);
std::uint64_t parse_unsigned(std::string_view field, std::string_view what);
bool parse_bool(std::string_view field, std::string_view what);

/// Lines of a text file without trailing '\r' / '\n'. Throws IoError.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Replace `path` with `content` via a temporary file and rename. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Append and flush. Throws IoError.
void append_to_file(const std::filesystem::path& path, std::string_view content);

}  // namespace equicalib::csv
