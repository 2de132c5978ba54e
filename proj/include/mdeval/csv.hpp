#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mdeval {

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);
/// Quotes a field when it contains a comma, quote or leading/trailing space.
std::string csv_field(std::string_view value);
/// Non-empty lines of `text`, with trailing '\r' removed.
std::vector<std::string_view> text_lines(std::string_view text);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace mdeval
