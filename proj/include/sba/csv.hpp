#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sba::csv {

using Row = std::vector<std::string>;

/// Parsed RFC-4180 document. `line_numbers[i]` is the physical line on which
/// data row i starts (header is line 1).
struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;

  /// Column index of `name`, or throws DataError.
  std::size_t column(std::string_view name) const;
};

/// Reads a CSV file with a mandatory header row. Throws DataError if the
/// file cannot be opened or is empty.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& fields);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Strict decimal parse of a whole cell. Throws DataError naming `context`.
double parse_double(std::string_view cell, std::string_view context);
long long parse_int(std::string_view cell, std::string_view context);

}  // namespace sba::csv
