#pragma once

// CSV ingestion for wide trip-level datasets: one row per observation, a
// choice column holding labels or 0-based indices, numeric attribute
// columns, and categorical columns expanded to 0/1 dummies named
// `variable_level` (levels in sorted order, one dummy per level).

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reslogit/types.hpp"

namespace reslogit {

/// Raw parsed CSV: header plus string cells. Minimal quote handling
/// (RFC 4180 without multi-line fields).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // same width as header

  int column_of(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return static_cast<int>(c);
    }
    throw Error("csv: missing column '" + name + "'");
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line,
                                               std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"' && field.empty()) {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) {
    throw Error("csv: unterminated quote on line " + std::to_string(line_no));
  }
  out.push_back(field);
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  if (begin == end) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<long> parse_int(const std::string& s) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
  if (begin == end) return std::nullopt;
  long value = 0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line[0] == '\xEF' &&
        line[1] == '\xBB' && line[2] == '\xBF') {
      line.erase(0, 3);  // UTF-8 BOM
    }
    if (line.empty() && line_no > 1) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (line_no == 1) {
      table.header = std::move(fields);
      std::set<std::string> seen;
      for (const auto& h : table.header) {
        if (!seen.insert(h).second) {
          throw Error("csv: duplicate header column '" + h + "'");
        }
      }
    } else {
      if (fields.size() != table.header.size()) {
        throw Error("csv: line " + std::to_string(line_no) + " has " +
                    std::to_string(fields.size()) + " fields, header has " +
                    std::to_string(table.header.size()));
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) throw Error("csv: '" + path + "' has no header row");
  return table;
}

/// Loaded dataset plus the expansion metadata needed to align another
/// file to the same columns later.
struct LoadedDataset {
  Dataset data;
  std::string choice_column;
  std::vector<std::string> variables;  // as requested, pre-expansion
  std::map<std::string, std::vector<std::string>> categorical_levels;
};

/// Builds a Dataset from a CSV table. `variables` empty means every
/// column except the choice column. When `expected_alt_names` is given,
/// choice labels must come from that list (used when scoring held-out
/// data against a fitted model).
inline LoadedDataset load_csv(
    const std::string& path, const std::string& choice_column,
    std::vector<std::string> variables = {},
    const std::vector<std::string>& expected_alt_names = {}) {
  const CsvTable table = read_csv_table(path);
  const int choice_col = table.column_of(choice_column);
  if (variables.empty()) {
    for (const auto& h : table.header) {
      if (h != choice_column) variables.push_back(h);
    }
  }
  if (variables.empty()) {
    throw Error("csv: no attribute columns besides the choice column");
  }

  std::vector<int> var_cols;
  for (const auto& v : variables) {
    if (v == choice_column) {
      throw Error("csv: '" + v + "' is the choice column, not an attribute");
    }
    var_cols.push_back(table.column_of(v));
  }

  // Missing values anywhere in the used columns are rejected up front,
  // with data line numbers (header is line 1).
  {
    std::vector<std::size_t> bad_lines;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      bool missing = detail::trim(table.rows[r][choice_col]).empty();
      for (int c : var_cols) {
        if (detail::trim(table.rows[r][static_cast<std::size_t>(c)]).empty()) {
          missing = true;
        }
      }
      if (missing) bad_lines.push_back(r + 2);
      if (bad_lines.size() >= 20) break;
    }
    if (!bad_lines.empty()) {
      std::ostringstream msg;
      msg << "csv: missing values on line";
      if (bad_lines.size() > 1) msg << "s";
      for (std::size_t i = 0; i < bad_lines.size(); ++i) {
        msg << (i == 0 ? " " : ", ") << bad_lines[i];
      }
      throw Error(msg.str());
    }
  }

  LoadedDataset out;
  out.choice_column = choice_column;
  out.variables = variables;

  // Column typing: fully numeric stays numeric, fully non-numeric is
  // categorical, a mix is treated as a corrupted numeric column.
  struct Column {
    std::string name;
    bool categorical = false;
    std::vector<std::string> levels;  // sorted, categorical only
  };
  std::vector<Column> columns;
  for (std::size_t vi = 0; vi < variables.size(); ++vi) {
    const int c = var_cols[vi];
    std::size_t numeric = 0;
    std::size_t first_bad_line = 0;
    std::set<std::string> levels;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string& cell = table.rows[r][static_cast<std::size_t>(c)];
      if (detail::parse_double(cell)) {
        ++numeric;
      } else if (first_bad_line == 0) {
        first_bad_line = r + 2;
      }
      levels.insert(detail::trim(cell));
    }
    Column col;
    col.name = variables[vi];
    if (numeric == table.rows.size()) {
      col.categorical = false;
    } else if (numeric == 0) {
      col.categorical = true;
      col.levels.assign(levels.begin(), levels.end());
      out.categorical_levels[col.name] = col.levels;
    } else {
      throw Error("csv: column '" + col.name +
                  "' mixes numeric and non-numeric values (first non-numeric "
                  "on line " +
                  std::to_string(first_bad_line) + ")");
    }
    columns.push_back(std::move(col));
  }

  // Choice mapping: all-integer values starting at 0 are taken as
  // 0-based indices; anything else is a label set in sorted order.
  std::vector<int> choices(table.rows.size());
  std::vector<std::string> alt_names;
  if (!expected_alt_names.empty()) {
    alt_names = expected_alt_names;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string label = detail::trim(table.rows[r][choice_col]);
      const auto it = std::find(alt_names.begin(), alt_names.end(), label);
      if (it == alt_names.end()) {
        throw Error("csv: unknown choice label '" + label + "' on line " +
                    std::to_string(r + 2));
      }
      choices[r] = static_cast<int>(it - alt_names.begin());
    }
  } else {
    bool all_int = true;
    long max_idx = 0;
    long min_idx = 0;
    for (const auto& row : table.rows) {
      const auto v = detail::parse_int(row[static_cast<std::size_t>(choice_col)]);
      if (!v) {
        all_int = false;
        break;
      }
      max_idx = std::max(max_idx, *v);
      min_idx = std::min(min_idx, *v);
    }
    if (all_int && min_idx == 0) {
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        choices[r] = static_cast<int>(
            *detail::parse_int(table.rows[r][static_cast<std::size_t>(choice_col)]));
      }
      for (long j = 0; j <= max_idx; ++j) alt_names.push_back(std::to_string(j));
    } else {
      std::set<std::string> labels;
      for (const auto& row : table.rows) {
        labels.insert(detail::trim(row[static_cast<std::size_t>(choice_col)]));
      }
      alt_names.assign(labels.begin(), labels.end());
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string label = detail::trim(table.rows[r][choice_col]);
        choices[r] = static_cast<int>(
            std::find(alt_names.begin(), alt_names.end(), label) -
            alt_names.begin());
      }
    }
  }

  // Expanded attribute matrix.
  std::vector<std::string> names;
  for (const auto& col : columns) {
    if (col.categorical) {
      for (const auto& level : col.levels) names.push_back(col.name + "_" + level);
    } else {
      names.push_back(col.name);
    }
  }
  Eigen::MatrixXd attrs(static_cast<Eigen::Index>(table.rows.size()),
                        static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    Eigen::Index k = 0;
    for (std::size_t vi = 0; vi < columns.size(); ++vi) {
      const std::string& cell = table.rows[r][static_cast<std::size_t>(var_cols[vi])];
      if (columns[vi].categorical) {
        const std::string level = detail::trim(cell);
        for (const auto& l : columns[vi].levels) {
          attrs(static_cast<Eigen::Index>(r), k++) = (l == level) ? 1.0 : 0.0;
        }
      } else {
        const auto v = detail::parse_double(cell);
        if (!v) {
          throw Error("csv: column '" + columns[vi].name +
                      "' has unparseable numeric value '" + cell +
                      "' on line " + std::to_string(r + 2));
        }
        attrs(static_cast<Eigen::Index>(r), k++) = *v;
      }
    }
  }

  out.data.n_obs = static_cast<Eigen::Index>(table.rows.size());
  out.data.n_alts = static_cast<Eigen::Index>(alt_names.size());
  out.data.attribute_names = std::move(names);
  out.data.attributes = std::move(attrs);
  out.data.choices = std::move(choices);
  out.data.alt_names = std::move(alt_names);
  out.data.validate();
  return out;
}

/// Writes the expanded dataset back out; loading the result again gives
/// an identical dataset (column order and dummy naming included).
inline void save_csv(const Dataset& data, const std::string& path,
                     const std::string& choice_column) {
  std::ofstream outf(path);
  if (!outf) throw Error("csv: cannot write '" + path + "'");
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += "\"\"";
      else q += ch;
    }
    return q + "\"";
  };
  for (const auto& name : data.attribute_names) outf << quote(name) << ",";
  outf << quote(choice_column) << "\n";
  char buf[64];
  for (Eigen::Index n = 0; n < data.n_obs; ++n) {
    for (Eigen::Index k = 0; k < data.n_vars(); ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), data.attributes(n, k));
      (void)ec;
      outf.write(buf, ptr - buf);
      outf << ",";
    }
    outf << quote(data.alt_names[static_cast<std::size_t>(
               data.choices[static_cast<std::size_t>(n)])])
         << "\n";
  }
}

/// Reorders/selects the columns of a freshly loaded dataset to match the
/// expansion recorded at training time. A dummy column for a level that
/// does not occur in the new file is filled with zeros; any other
/// missing column is an error.
inline Dataset align_attributes(
    const LoadedDataset& loaded,
    const std::vector<std::string>& expected_names,
    const std::map<std::string, std::vector<std::string>>& expected_categoricals) {
  Dataset out = loaded.data;
  out.attribute_names = expected_names;
  out.attributes.resize(loaded.data.n_obs,
                        static_cast<Eigen::Index>(expected_names.size()));
  for (std::size_t k = 0; k < expected_names.size(); ++k) {
    const auto& name = expected_names[k];
    bool found = false;
    for (std::size_t c = 0; c < loaded.data.attribute_names.size(); ++c) {
      if (loaded.data.attribute_names[c] == name) {
        out.attributes.col(static_cast<Eigen::Index>(k)) =
            loaded.data.attributes.col(static_cast<Eigen::Index>(c));
        found = true;
        break;
      }
    }
    if (found) continue;
    bool is_absent_level = false;
    for (const auto& [base, levels] : expected_categoricals) {
      for (const auto& level : levels) {
        if (base + "_" + level == name) is_absent_level = true;
      }
    }
    if (!is_absent_level) {
      throw Error("csv: column '" + name +
                  "' required by the model is missing from the file");
    }
    out.attributes.col(static_cast<Eigen::Index>(k)).setZero();
  }
  // A level unseen at training time has no coefficient; refuse it.
  for (const auto& name : loaded.data.attribute_names) {
    if (std::find(expected_names.begin(), expected_names.end(), name) ==
        expected_names.end()) {
      for (const auto& [base, levels] : loaded.categorical_levels) {
        for (const auto& level : levels) {
          if (base + "_" + level == name &&
              expected_categoricals.count(base) > 0) {
            throw Error("csv: categorical '" + base + "' has unknown level '" +
                        level + "' not present at training time");
          }
        }
      }
    }
  }
  out.validate();
  return out;
}

}  // namespace reslogit
