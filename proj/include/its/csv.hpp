#pragma once

// Minimal RFC-4180-style CSV reading/writing. Quoted fields are supported
// because several categorical levels contain commas. Lines starting with '#'
// are metadata comments and are skipped on read.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "its/common.hpp"

namespace its::csv {

inline std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) {
    throw validation_error("csv: unterminated quote at line " + std::to_string(line_no));
  }
  fields.push_back(cur);
  return fields;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number in the source file for each row, for error messages.
  std::vector<std::size_t> line_numbers;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<int>(j);
    }
    return -1;
  }

  int require_column(const std::string& name, const std::string& file) const {
    const int j = column(name);
    if (j < 0) throw validation_error(file + ": missing required column '" + name + "'");
    return j;
  }
};

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open csv file: " + path);
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_line(line, line_no);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw validation_error(path + ": line " + std::to_string(line_no) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw validation_error(path + ": empty csv file");
  return t;
}

inline std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

// Shortest round-trip decimal representation, stable across runs.
inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  const std::string full = os.str();
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    std::ostringstream trial;
    trial.precision(prec);
    trial << v;
    if (std::stod(trial.str()) == v) return trial.str();
  }
  return full;
}

class Writer {
public:
  explicit Writer(const std::string& path) : out_(path), path_(path) {
    if (!out_) throw validation_error("cannot open file for writing: " + path);
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j) out_ << ",";
      out_ << quote_field(fields[j]);
    }
    out_ << "\n";
  }

  const std::string& path() const { return path_; }

private:
  std::ofstream out_;
  std::string path_;
};

inline long parse_long(const std::string& s, const std::string& what, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw validation_error("line " + std::to_string(line_no) + ": cannot parse " + what +
                           " from '" + s + "'");
  }
}

inline double parse_double(const std::string& s, const std::string& what, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw validation_error("line " + std::to_string(line_no) + ": cannot parse " + what +
                           " from '" + s + "'");
  }
}

}  // namespace its::csv
