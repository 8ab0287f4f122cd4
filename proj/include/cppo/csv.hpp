#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cppo {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that parses back to the same double.
std::string format_number(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws CsvError if the column is missing.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  std::vector<double> numeric(const std::string& name) const;
};

/// Plain comma-separated text with a header row; no quoting.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Keeps the header line and the first `rows` data lines of a file.
void truncate_csv(const std::filesystem::path& path, std::size_t rows);

}  // namespace cppo
