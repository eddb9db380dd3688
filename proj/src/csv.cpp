#include "equicalib/csv.hpp"

#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "equicalib/errors.hpp"

namespace equicalib::csv {

std::string format_number(double v) { return fmt::format("{}", v); }

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); }

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_number(std::string_view field, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ConfigError(fmt::format("cannot parse {} from '{}'", what, field));
  }
  return v;
}

std::optional<double> parse_optional(std::string_view field, std::string_view what) {
  if (field == "NA") return std::nullopt;
  return parse_number(field, what);
}

long long parse_integer(std::string_view field, std::string_view what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ConfigError(fmt::format("cannot parse {} from '{}'", what, field));
  }
  return v;
}

std::uint64_t parse_unsigned(std::string_view field, std::string_view what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ConfigError(fmt::format("cannot parse {} from '{}'", what, field));
  }
  return v;
}

bool parse_bool(std::string_view field, std::string_view what) {
  if (field == "true" || field == "1") return true;
  if (field == "false" || field == "0") return false;
  throw ConfigError(fmt::format("cannot parse {} from '{}'", what, field));
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError(fmt::format("error while reading '{}'", path.string()));
  return lines;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("error while writing '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot move '{}' to '{}': {}", tmp.string(), path.string(), ec.message()));
}

void append_to_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError(fmt::format("cannot open '{}' for appending", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError(fmt::format("error while writing '{}'", path.string()));
}

}  // namespace equicalib::csv
