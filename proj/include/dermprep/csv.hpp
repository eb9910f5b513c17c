#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dermprep::csv {

/// Splits text into lines, accepting LF and CRLF endings. A trailing
/// newline does not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view text);

/// Splits one line at commas. The formats used in this project never
/// quote or embed commas, so no quoting rules apply.
std::vector<std::string_view> split_fields(std::string_view line);

/// Strict numeric parsing: the whole field must be consumed.
/// `context` names the location for the error message (e.g. "row 3").
double parse_double(std::string_view field, const std::string& context);
std::int64_t parse_int(std::string_view field, const std::string& context);

/// Shortest decimal form that round-trips through double exactly.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace dermprep::csv
