#include "sba/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sba/error.hpp"

namespace sba::csv {

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("missing CSV column '" + std::string(name) + "'");
}

Table parse(std::string_view text) {
  Table table;
  std::vector<Row> records;
  std::vector<std::size_t> starts;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_start = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    records.push_back(std::move(row));
    starts.push_back(row_start);
    row.clear();
  };

  // Strip a UTF-8 byte-order mark.
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.empty()) {
          throw DataError("line " + std::to_string(line) + ": stray quote in unquoted field");
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        row_start = line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field");
  if (field_started || !field.empty() || !row.empty()) end_row();

  if (records.empty()) throw DataError("CSV has no header row");
  table.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    // Blank lines carry no data.
    if (records[i].size() == 1 && records[i][0].empty()) continue;
    table.rows.push_back(std::move(records[i]));
    table.line_numbers.push_back(starts[i]);
  }
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw NumericError("cannot format double");
  return std::string(buf, ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_double(std::string_view cell, std::string_view context) {
  const std::string_view s = trim(cell);
  double value = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError(std::string(context) + ": non-numeric cell '" + std::string(cell) + "'");
  }
  return value;
}

long long parse_int(std::string_view cell, std::string_view context) {
  const std::string_view s = trim(cell);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError(std::string(context) + ": expected integer, got '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace sba::csv
