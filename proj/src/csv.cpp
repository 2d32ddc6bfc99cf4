#include "busvar/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "busvar/common.hpp"

namespace busvar::csv {

std::string read_file(std::filesystem::path const& path) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw io_error{"cannot open " + path.string()};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw io_error{"read failed: " + path.string()};
  }
  return std::move(ss).str();
}

void write_file(std::filesystem::path const& path, std::string_view content) {
  std::ofstream out{path, std::ios::binary | std::ios::trunc};
  if (!out) {
    throw io_error{"cannot write " + path.string()};
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw io_error{"write failed: " + path.string()};
  }
}

void split_into(std::string_view line, std::vector<std::string_view>& out,
                char sep) {
  out.clear();
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  std::size_t pos = 0;
  while (true) {
    auto const next = line.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  split_into(line, out, sep);
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) {
    return std::nullopt;
  }
  if (s.front() == '+') {
    s.remove_prefix(1);
  }
  double v{};
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  long long v{};
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string format_optional(double v) {
  return std::isnan(v) ? std::string{} : format_double(v);
}

std::optional<std::size_t> table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t table::require_column(std::string_view name) const {
  if (auto const c = column(name)) {
    return *c;
  }
  throw invalid_input{fmt::format("missing column '{}'", name)};
}

table parse_table(std::string_view text, char sep) {
  table t;
  std::size_t line_no = 0;
  std::vector<std::string_view> fields;
  for_each_line(text, [&](std::string_view line) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.empty()) {
      return;
    }
    split_into(line, fields, sep);
    if (t.header.empty()) {
      for (auto f : fields) {
        t.header.emplace_back(trim(f));
      }
      return;
    }
    if (fields.size() != t.header.size()) {
      throw invalid_input{fmt::format("line {}: expected {} fields, got {}",
                                      line_no, t.header.size(), fields.size())};
    }
    auto& row = t.rows.emplace_back();
    row.reserve(fields.size());
    for (auto f : fields) {
      row.emplace_back(trim(f));
    }
  });
  if (t.header.empty()) {
    throw invalid_input{"empty table (no header row)"};
  }
  return t;
}

table read_table(std::filesystem::path const& path, char sep) {
  try {
    return parse_table(read_file(path), sep);
  } catch (invalid_input const& e) {
    throw invalid_input{path.string() + ": " + e.what()};
  }
}

}  // namespace busvar::csv
