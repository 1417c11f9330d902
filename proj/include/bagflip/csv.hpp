#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bagflip {

class CsvError : public std::runtime_error {
 public:
  CsvError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

/// Comma-separated table with a mandatory header row. Cells are trimmed;
/// blank lines are skipped; every row must have as many cells as the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  /// Index of a header column, or throws CsvError on line 1.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(std::istream& in);

unsigned long parse_count(const CsvRow& row, std::size_t column);
long parse_integer(const CsvRow& row, std::size_t column);

}  // namespace bagflip
