#pragma once

// Minimal CSV reading and number formatting shared by all file formats.
// Fields never contain commas or quotes, so no quoting is supported.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stereolab {

/// Raised for malformed input files; the message names file and line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be opened, written or replaced.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> comments;  // leading "# ..." lines, marker stripped
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Index of a header column, or npos.
  std::size_t column(std::string_view name) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

std::vector<std::string> split_fields(std::string_view line);

/// Parses CSV text. Leading lines starting with '#' are comments; blank lines
/// are skipped; every row must have as many fields as the header.
CsvTable parse_csv(std::string_view text, std::string_view source_name);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temporary file and rename, so readers never observe a
/// partially written file.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Shortest-safe decimal form: 17 significant digits, '.' separator.
std::string format_real(double value);
double parse_real(std::string_view text);
std::uint64_t parse_u64(std::string_view text);
long long parse_i64(std::string_view text);

/// Fixed two-decimal rendering, e.g. 0.36273 -> "36.27" when scaled by 100.
std::string format_fixed2(double value);

/// FNV-1a 64 of the file content as 16 lowercase hex digits.
std::string file_checksum(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace stereolab
