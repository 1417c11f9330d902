#include "bagflip/csv.hpp"

#include <charconv>
#include <istream>

namespace bagflip {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

template <class T>
T parse_number(const CsvRow& row, std::size_t column, const char* what) {
  if (column >= row.cells.size()) throw CsvError(row.line, "missing column " + std::to_string(column));
  const std::string& cell = row.cells[column];
  T value{};
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw CsvError(row.line, std::string("expected ") + what + ", got '" + cell + "'");
  }
  return value;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw CsvError(1, "missing column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (number == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      table.header = split(line);
      have_header = true;
      continue;
    }
    CsvRow row{number, split(line)};
    if (row.cells.size() != table.header.size()) {
      throw CsvError(number, "expected " + std::to_string(table.header.size()) + " cells, found " +
                                 std::to_string(row.cells.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw CsvError(number == 0 ? 1 : number, "missing header row");
  return table;
}

unsigned long parse_count(const CsvRow& row, std::size_t column) {
  return parse_number<unsigned long>(row, column, "a nonnegative integer");
}

long parse_integer(const CsvRow& row, std::size_t column) { return parse_number<long>(row, column, "an integer"); }

}  // namespace bagflip
