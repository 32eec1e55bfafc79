#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sabia {

using CsvRow = std::vector<std::string>;

/// RFC 4180 parsing: quoted fields may hold commas, doubled quotes and line
/// breaks; CRLF and LF row endings are both accepted. A trailing newline does
/// not produce an empty row. Throws SchemaError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view content);

/// Quotes the field only when it contains a comma, quote or line break.
std::string csv_field(std::string_view field);

std::string csv_line(const CsvRow& row);

}  // namespace sabia
