#pragma once

#include <string>
#include <vector>

namespace rcb {

/// Shortest round-trippable decimal form of a double (17 significant digits,
/// %.17g). Infinities and NaN render as inf/-inf/nan.
std::string format_double(double value);

/// One parsed CSV table: a header row plus data rows, all cells as strings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index of `name`, or -1 when absent.
  int column(const std::string& name) const;
};

/// Reads a comma-separated file with a header row. Handles quoted fields
/// (embedded commas, doubled quotes, embedded newlines) and CRLF endings.
/// Short rows are padded with empty cells; overlong rows are an error.
CsvTable read_csv(const std::string& path);

/// Escapes one cell for CSV output (quotes it when it contains a comma,
/// quote or newline).
std::string csv_escape(const std::string& cell);

/// Writes rows as one CSV line each, escaping cells as needed.
void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace rcb
