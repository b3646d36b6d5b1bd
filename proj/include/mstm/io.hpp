#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace mstm {

// Full-precision decimal serialization (round-trips through strtod) so that
// output files can be compared byte-for-byte across runs.
std::string format_full(double x);

double parse_double(const std::string& s, const std::string& context);
int parse_int(const std::string& s, const std::string& context);

// Minimal comma-separated table: header row + string cells, fields trimmed.
// Quoting is not supported; none of the file formats here need it.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
  void require_columns(const std::vector<std::string>& names,
                       const std::string& what) const;
  double double_at(std::size_t row, int col) const;
  int int_at(std::size_t row, int col) const;
};

Csv read_csv(std::istream& in);
Csv read_csv_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace mstm
