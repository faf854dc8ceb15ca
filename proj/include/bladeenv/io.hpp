#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bladeenv::io {

inline constexpr int kSchemaVersion = 1;

/// A parsed CSV table: leading `#` comment lines, one header row, data rows.
struct CsvTable {
  std::vector<std::string> comments;  ///< without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws DomainError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable read_csv(const std::string& path);
std::vector<std::string> split(std::string_view line, char sep = ',');
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Shortest round-trip decimal representation (17 significant digits at most).
std::string format_double(double v);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_file(const std::string& path);
std::string hex64(std::uint64_t v);

std::string read_text(const std::string& path);
/// Writes through a temporary file and rename so readers never see partial output.
void write_text(const std::string& path, std::string_view text);

}  // namespace bladeenv::io
