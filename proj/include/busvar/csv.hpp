#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace busvar::csv {

// Reads a whole file; throws io_error when it cannot be opened.
std::string read_file(std::filesystem::path const& path);

void write_file(std::filesystem::path const& path, std::string_view content);

// Splits one line on `sep`. No quoting: none of the pipeline's formats quote.
// A trailing '\r' is dropped.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

// Same as split() but into a caller-owned buffer (hot ingest loop).
void split_into(std::string_view line, std::vector<std::string_view>& out,
                char sep = ',');

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest round-trip representation, so identical values always print the
// same bytes.
std::string format_double(double v);

// Empty string for NaN (missing).
std::string format_optional(double v);

// Header-keyed table of string cells.
struct table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
};

// Parses header + rows; rows with a different field count throw
// invalid_input naming the line.
table parse_table(std::string_view text, char sep = ',');
table read_table(std::filesystem::path const& path, char sep = ',');

// Calls fn(line) for every line of text, without the terminator.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto const nl = text.find('\n', pos);
    auto const end = nl == std::string_view::npos ? text.size() : nl;
    fn(text.substr(pos, end - pos));
    pos = end + 1;
  }
}

}  // namespace busvar::csv
