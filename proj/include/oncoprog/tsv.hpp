#ifndef ONCOPROG_TSV_HPP
#define ONCOPROG_TSV_HPP

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "oncoprog/error.hpp"

namespace oncoprog::tsv {

[[nodiscard]] inline auto
split(std::string_view line) -> std::vector<std::string> {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

[[nodiscard]] inline auto
trim(std::string_view s) -> std::string_view {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

struct row {
  std::size_t line{};  // 1-based line number in the source
  std::vector<std::string> fields;
};

struct table {
  std::vector<std::string> header;
  std::vector<row> rows;

  [[nodiscard]] auto
  find(std::string_view name) const -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    return std::nullopt;
  }

  [[nodiscard]] auto
  column(std::string_view name) const -> std::size_t {
    if (auto i = find(name))
      return *i;
    throw error(errc::missing_column, std::string(name));
  }
};

// Header line is required; blank lines and lines starting with '#' are
// skipped. Rows shorter than the header are MalformedRow.
[[nodiscard]] inline auto
parse(std::istream &in, const std::string &source = "<stream>") -> table {
  table t;
  std::string line;
  std::size_t line_num = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_num;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == '#')
      continue;
    auto fields = split(line);
    for (auto &f : fields)
      f = std::string(trim(f));
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() < t.header.size())
      throw error(errc::malformed_row,
                  source + " line " + std::to_string(line_num) + ": expected " +
                    std::to_string(t.header.size()) + " fields, found " +
                    std::to_string(fields.size()));
    t.rows.push_back({line_num, std::move(fields)});
  }
  if (!have_header)
    throw error(errc::malformed_row, source + ": missing header line");
  return t;
}

[[nodiscard]] inline auto
read_file(const std::filesystem::path &path) -> table {
  std::ifstream in(path);
  if (!in)
    throw error(errc::io_error, "cannot open " + path.string());
  return parse(in, path.string());
}

}  // namespace oncoprog::tsv

#endif  // ONCOPROG_TSV_HPP
