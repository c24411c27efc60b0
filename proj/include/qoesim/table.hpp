#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qoesim/error.hpp"
#include "qoesim/text.hpp"

namespace qoesim {

using Json = nlohmann::json;

enum class OutputFormat { kCsv, kJsonLines };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "jsonl" || s == "json-lines" || s == "jsonlines") return OutputFormat::kJsonLines;
  throw InputError("unknown output format '" + std::string(s) + "' (expected csv or json-lines)");
}

/// One cell of a result table. Doubles are written with six significant
/// digits; monostate is an empty CSV field / JSON null.
using Cell = std::variant<std::monostate, std::int64_t, std::uint64_t, double, std::string>;

/// Flat result table: fixed column order plus self-describing metadata.
struct Table {
  Json metadata = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == name) return c;
    throw InputError("table has no column '" + std::string(name) + "'");
  }
};

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string cell_to_csv(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "";
        else if constexpr (std::is_same_v<T, double>) return text::format_sig6(v);
        else if constexpr (std::is_same_v<T, std::string>) return csv_escape(v);
        else return std::to_string(v);
      },
      c);
}

inline Json cell_to_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, double>) return text::round_sig6(v);
        else return v;
      },
      c);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t p = 0; p < line.size(); ++p) {
    const char c = line[p];
    if (quoted) {
      if (c == '"' && p + 1 < line.size() && line[p + 1] == '"') {
        cur += '"';
        ++p;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

// CSV layout: "# <key>: <compact json>" metadata lines (keys sorted), the
// header row, then data rows.
inline void write_table(std::ostream& out, const Table& t, OutputFormat format) {
  if (format == OutputFormat::kCsv) {
    for (const auto& [key, value] : t.metadata.items()) out << "# " << key << ": " << value.dump() << '\n';
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << detail::cell_to_csv(row[c]);
      out << '\n';
    }
    return;
  }
  // JSON lines: a metadata object (with the column list) then one object per
  // row with keys in column order.
  Json head = Json::object();
  head["metadata"] = t.metadata;
  head["columns"] = t.columns;
  out << head.dump() << '\n';
  for (const auto& row : t.rows) {
    out << '{';
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << Json(t.columns[c]).dump() << ':' << detail::cell_to_json(row[c]).dump();
    out << "}\n";
  }
}

inline void write_table_file(const std::string& path, const Table& t, OutputFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  write_table(out, t, format);
  out.flush();
  if (!out) throw InputError("write failed for '" + path + "'");
}

/// Reads either format back. CSV cells come back as strings (empty = null);
/// JSON cells keep their JSON type.
inline Table read_table(std::istream& in, OutputFormat format) {
  Table t;
  std::string line;
  if (format == OutputFormat::kCsv) {
    while (std::getline(in, line)) {
      if (line.rfind("# ", 0) == 0) {
        const auto colon = line.find(": ");
        if (colon == std::string::npos) throw InputError("table: malformed metadata line");
        t.metadata[line.substr(2, colon - 2)] = Json::parse(line.substr(colon + 2));
        continue;
      }
      t.columns = detail::split_csv_line(line);
      break;
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto fields = detail::split_csv_line(line);
      if (fields.size() != t.columns.size()) throw InputError("table: row width does not match header");
      std::vector<Cell> row;
      for (auto& f : fields) row.emplace_back(f.empty() ? Cell{} : Cell{std::move(f)});
      t.rows.push_back(std::move(row));
    }
    return t;
  }
  if (!std::getline(in, line)) throw InputError("table: empty json-lines file");
  const Json head = Json::parse(line);
  t.metadata = head.at("metadata");
  t.columns = head.at("columns").get<std::vector<std::string>>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json obj = Json::parse(line);
    std::vector<Cell> row;
    for (const auto& col : t.columns) {
      const Json& v = obj.at(col);
      if (v.is_null()) row.emplace_back();
      else if (v.is_number_unsigned()) row.emplace_back(v.get<std::uint64_t>());
      else if (v.is_number_integer()) row.emplace_back(v.get<std::int64_t>());
      else if (v.is_number_float()) row.emplace_back(v.get<double>());
      else row.emplace_back(v.get<std::string>());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table read_table_file(const std::string& path, OutputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_table(in, format);
}

// Typed accessors tolerant of the CSV (string) and JSON (typed) readings.
inline bool cell_is_null(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

inline double cell_double(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) {
    const auto v = text::parse_double(*s);
    if (!v) throw InputError("table: expected number, got '" + *s + "'");
    return *v;
  }
  if (auto d = std::get_if<double>(&c)) return *d;
  if (auto i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (auto u = std::get_if<std::uint64_t>(&c)) return static_cast<double>(*u);
  throw InputError("table: expected number, got null");
}

inline std::uint64_t cell_uint(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc{} || ptr != s->data() + s->size()) throw InputError("table: expected integer, got '" + *s + "'");
    return v;
  }
  if (auto u = std::get_if<std::uint64_t>(&c)) return *u;
  if (auto i = std::get_if<std::int64_t>(&c)) return static_cast<std::uint64_t>(*i);
  throw InputError("table: expected integer");
}

inline std::string cell_string(const Cell& c) {
  if (auto s = std::get_if<std::string>(&c)) return *s;
  if (cell_is_null(c)) return "";
  return detail::cell_to_csv(c);
}

}  // namespace qoesim
