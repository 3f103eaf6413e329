#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "slsm/error.hpp"
#include "slsm/lsq.hpp"

namespace slsm::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* tool_version = "0.1.0";

/// 17 significant digits; strtod of the result gives back v exactly.
inline std::string format_double(double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

/// A CSV cell: integer, floating point, or text.
using Cell = std::variant<std::int64_t, double, std::string>;

inline std::string format_cell(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  return std::get<std::string>(cell);
}

inline Cell parse_cell(std::string_view text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  std::int64_t i = 0;
  if (auto r = std::from_chars(first, last, i);
      r.ec == std::errc() && r.ptr == last && std::to_string(i) == text) {
    return i;
  }
  double d = 0.0;
  if (auto r = std::from_chars(first, last, d); r.ec == std::errc() && r.ptr == last) return d;
  return std::string(text);
}

/// Comma separated, header row always present, '.' decimal point, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    detail::require(row.size() == header.size(), ErrorKind::contract,
                    "csv: row width does not match the header");
    rows.push_back(std::move(row));
  }

  std::string str() const {
    std::string out;
    auto line = [&](const auto& cells, auto&& fmt) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out += ',';
        out += fmt(cells[k]);
      }
      out += '\n';
    };
    line(header, [](const std::string& s) { return s; });
    for (const auto& row : rows) line(row, format_cell);
    return out;
  }

  friend bool operator==(const CsvTable&, const CsvTable&) = default;
};

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    parts.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (first) {
      for (auto f : fields) table.header.emplace_back(trim(f));
      first = false;
      continue;
    }
    detail::require(fields.size() == table.header.size(), ErrorKind::io,
                    "csv: row has " + std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(table.header.size()));
    std::vector<Cell> row;
    for (auto f : fields) row.push_back(parse_cell(trim(f)));
    table.rows.push_back(std::move(row));
  }
  detail::require(!first, ErrorKind::io, "csv: empty input");
  return table;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(in.good(), ErrorKind::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  detail::require(out.good(), ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  detail::require(out.good(), ErrorKind::io, "failed writing '" + path.string() + "'");
}

/// Reads (x, y) pairs. An optional non-numeric header line is skipped; every
/// other non-blank line must hold exactly two finite numbers.
inline Dataset parse_xy_csv(std::string_view text) {
  Dataset data;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_skipped = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    detail::require(fields.size() == 2, ErrorKind::io,
                    "csv line " + std::to_string(line_no) + ": expected 2 fields");
    const Cell cx = parse_cell(trim(fields[0]));
    const Cell cy = parse_cell(trim(fields[1]));
    const bool numeric = !std::holds_alternative<std::string>(cx) &&
                         !std::holds_alternative<std::string>(cy);
    if (!numeric && !header_skipped && data.size() == 0) {
      header_skipped = true;
      continue;
    }
    detail::require(numeric, ErrorKind::io,
                    "csv line " + std::to_string(line_no) + ": non-numeric field");
    auto as_double = [](const Cell& c) {
      if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
      return std::get<double>(c);
    };
    data.x.push_back(as_double(cx));
    data.y.push_back(as_double(cy));
  }
  detail::require(data.size() > 0, ErrorKind::io, "csv: no data rows");
  data.validate();
  return data;
}

inline std::string xy_csv(const Dataset& data) {
  CsvTable t;
  t.header = {"x", "y"};
  for (std::size_t i = 0; i < data.size(); ++i) t.add_row({data.x[i], data.y[i]});
  return t.str();
}

/// Provenance of one CLI run; `config` alone is enough to re-run it.
struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["version"] = tool_version;
    j["outputs"] = outputs;
    return j;
  }
};

inline Json to_json(const FitResult& fit) {
  Json j;
  j["model"] = fit.model.name();
  j["params"] = fit.params;
  j["sse"] = fit.sse;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  return j;
}

/// A sample file: one '#'-prefixed manifest line, then one value per line.
inline std::string sample_file(const RunManifest& manifest, const std::vector<double>& values) {
  std::string out = "# " + manifest.to_json().dump() + "\n";
  for (double v : values) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

struct SampleFile {
  Json manifest;
  std::vector<double> values;
};

inline SampleFile parse_sample_file(std::string_view text) {
  SampleFile file;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      file.manifest = Json::parse(line.substr(1));
      continue;
    }
    const Cell c = parse_cell(line);
    detail::require(!std::holds_alternative<std::string>(c), ErrorKind::io,
                    "sample file: non-numeric line");
    file.values.push_back(std::holds_alternative<double>(c)
                              ? std::get<double>(c)
                              : static_cast<double>(std::get<std::int64_t>(c)));
  }
  return file;
}

}  // namespace slsm::io
