#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ceres {

/// Shortest decimal form that round-trips the double.
std::string format_double(double v);

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view raw);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  [[nodiscard]] std::size_t rows() const { return rows_.size(); }

  /// "# config_hash=<hex> seed=<seed>" followed by CRLF-terminated records.
  [[nodiscard]] std::string render(std::string_view config_hash, std::uint64_t seed) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// 16 hex digits of FNV-1a over `text`.
std::string config_hash(std::string_view text);

/// Writes `contents` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ceres
