#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ownet {

/// Minimal RFC 4180 reader: header row, comma separated, optional double-quote
/// quoting, tolerates CRLF and a UTF-8 BOM. Blank lines are skipped.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source_name);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::optional<std::size_t> column(std::string_view name) const;
  /// Column index or ParseError naming the missing column.
  std::size_t require_column(std::string_view name) const;

  /// Reads the next record; false at end of input.
  bool next(std::vector<std::string>& fields);

  /// Line number of the last record returned (1-based, header is line 1).
  std::size_t line() const noexcept { return line_; }
  const std::string& source() const noexcept { return source_; }

  [[noreturn]] void fail(const std::string& what) const;

 private:
  bool read_record(std::vector<std::string>& fields);

  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
  std::string buffer_;
};

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

/// Writes one CSV row of already-formatted fields.
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Strict number parsing for CSV cells; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace ownet
