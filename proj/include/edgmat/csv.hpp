#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgmat::csv {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits text into records at line breaks outside quoted fields (RFC 4180).
/// CRLF and LF are both accepted; a trailing empty line is dropped.
std::vector<std::string_view> split_records(std::string_view text);

/// Splits one record into unescaped fields.
std::vector<std::string> split_fields(std::string_view record);

std::string escape_field(std::string_view field);

}  // namespace edgmat::csv
