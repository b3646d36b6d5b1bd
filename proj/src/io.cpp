#include "mstm/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mstm/errors.hpp"

namespace mstm {

std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError(context + ": cannot parse number '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& context) {
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError(context + ": cannot parse integer '" + s + "'");
  return static_cast<int>(v);
}

namespace {
std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}
}  // namespace

int Csv::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

void Csv::require_columns(const std::vector<std::string>& names,
                          const std::string& what) const {
  for (const auto& n : names)
    if (column(n) < 0)
      throw ConfigError(what + ": missing required column '" + n + "'");
}

double Csv::double_at(std::size_t row, int col) const {
  return parse_double(rows[row][static_cast<std::size_t>(col)],
                      "csv row " + std::to_string(row + 2));
}

int Csv::int_at(std::size_t row, int col) const {
  return parse_int(rows[row][static_cast<std::size_t>(col)],
                   "csv row " + std::to_string(row + 2));
}

Csv read_csv(std::istream& in) {
  Csv csv;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      csv.header = fields;
      have_header = true;
    } else {
      if (fields.size() != csv.header.size())
        throw ConfigError("csv: row has " + std::to_string(fields.size()) +
                          " fields, header has " +
                          std::to_string(csv.header.size()));
      csv.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw ConfigError("csv: empty input");
  return csv;
}

Csv read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path, path);
  return read_csv(in);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path, path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path, path);
}

nlohmann::json load_json_file(const std::string& path) {
  std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("bad json in " + path + ": " + e.what(), path);
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace mstm
