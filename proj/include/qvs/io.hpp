#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "qvs/error.hpp"
#include "qvs/regression_data.hpp"

namespace qvs::io {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

/// Strict full-string parse of a finite double.
inline std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (used != t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Numeric CSV: comma separated, optional header row (detected as a first
/// row containing a non-numeric cell). Rows are numbered from 1 by line.
inline Matrix read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    std::vector<double> row;
    row.reserve(cells.size());
    std::optional<std::size_t> bad;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = parse_double(cells[c]);
      if (!v) {
        bad = c;
        break;
      }
      row.push_back(*v);
    }
    if (bad) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw InputError(path + ": non-numeric cell '" + trim(cells[*bad]) + "' at row " + std::to_string(lineno) +
                       ", column " + std::to_string(*bad + 1));
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw InputError(path + ": row " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                       " cells, expected " + std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": empty file");
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return out;
}

/// Design and response CSVs into standardized RegressionData.
inline RegressionData load_csv(const std::string& design_path, const std::string& response_path,
                               std::optional<double> sigma2 = std::nullopt) {
  const Matrix x = read_numeric_csv(design_path);
  const Matrix y = read_numeric_csv(response_path);
  if (y.cols() != 1) {
    throw InputError(response_path + ": response must be a single column, found " + std::to_string(y.cols()));
  }
  if (y.rows() != x.rows()) {
    throw InputError("dimension mismatch: design has " + std::to_string(x.rows()) + " rows but response has " +
                     std::to_string(y.rows()));
  }
  return RegressionData::from_raw(x, y.col(0), sigma2);
}

inline std::string format_number(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

/// A rectangular result table. Cells are numbers, integers or text.
struct Table {
  using Cell = std::variant<double, long long, std::string>;

  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  /// "# "-prefixed lines written above the header in TSV.
  std::vector<std::string> notes;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw Error("table row width does not match header");
    rows.push_back(std::move(row));
  }
};

/// Significant digits for TSV numbers; enough to reproduce values to 12
/// significant digits when read back.
inline constexpr int kTsvDigits = 12;

inline void write_tsv(std::ostream& os, const Table& t, int digits = kTsvDigits) {
  for (const auto& n : t.notes) os << "# " << n << '\n';
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "\t" : "") << t.columns[c];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << '\t';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              os << format_number(v, digits);
            } else {
              os << v;
            }
          },
          row[c]);
    }
    os << '\n';
  }
}

inline void write_tsv(std::ostream& os, const std::vector<Table>& tables, int digits = kTsvDigits) {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) os << '\n';
    write_tsv(os, tables[i], digits);
  }
}

inline nlohmann::json to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              if (std::isfinite(v)) {
                obj[t.columns[c]] = v;
              } else {
                obj[t.columns[c]] = format_number(v, 17);
              }
            } else {
              obj[t.columns[c]] = v;
            }
          },
          row[c]);
    }
    rows.push_back(std::move(obj));
  }
  nlohmann::json out = {{"name", t.name}, {"columns", t.columns}, {"rows", rows}};
  if (!t.notes.empty()) out["notes"] = t.notes;
  return out;
}

inline void write_json(std::ostream& os, const std::vector<Table>& tables) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : tables) arr.push_back(to_json(t));
  os << nlohmann::json{{"tables", arr}}.dump(2) << '\n';
}

/// A TSV block read back from disk: header plus string cells.
struct TextTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    return std::nullopt;
  }
};

/// Split TSV text into tables at blank lines; "#" lines are skipped.
inline std::vector<TextTable> read_tsv_tables(std::istream& in) {
  std::vector<TextTable> out;
  std::string line;
  bool in_table = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      in_table = false;
      continue;
    }
    if (line[0] == '#') continue;
    if (!in_table) {
      out.emplace_back();
      out.back().columns = split(line, '\t');
      in_table = true;
    } else {
      out.back().rows.push_back(split(line, '\t'));
    }
  }
  return out;
}

inline std::vector<TextTable> read_tsv_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_tsv_tables(in);
}

/// Flat "key = value" text; "#" starts a comment. Later keys override.
inline std::map<std::string, std::string> parse_key_values(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError(origin + ":" + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace qvs::io
