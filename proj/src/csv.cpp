#include "siv/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace siv {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r'))
    --end;
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && begin != end;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

XyData read_xy_csv(std::istream& in, const std::string& source_name) {
  XyData data;
  std::string line;
  int lineno = 0;
  bool first_data_candidate = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2 || fields.size() > 3)
      throw std::runtime_error(source_name + ":" + std::to_string(lineno) +
                               ": expected 2 or 3 columns");
    double x, y, s = 0.0;
    const bool ok = parse_double(fields[0], x) && parse_double(fields[1], y) &&
                    (fields.size() < 3 || parse_double(fields[2], s));
    if (!ok) {
      if (first_data_candidate) {  // header row
        first_data_candidate = false;
        continue;
      }
      throw std::runtime_error(source_name + ":" + std::to_string(lineno) +
                               ": malformed numeric row");
    }
    first_data_candidate = false;
    data.x.push_back(x);
    data.y.push_back(y);
    if (fields.size() == 3) data.sigma.push_back(s);
  }
  if (!data.sigma.empty() && data.sigma.size() != data.x.size())
    throw std::runtime_error(source_name + ": ragged sigma column");
  if (data.x.empty())
    throw std::runtime_error(source_name + ": no data rows");
  return data;
}

void write_table_csv(std::ostream& out,
                     const std::vector<std::string>& headers,
                     const std::vector<const std::vector<double>*>& columns) {
  if (headers.size() != columns.size())
    throw std::invalid_argument("write_table_csv: header/column mismatch");
  for (size_t i = 0; i < headers.size(); ++i)
    out << (i ? "," : "") << headers[i];
  out << "\n";
  const size_t rows = columns.empty() ? 0 : columns[0]->size();
  for (const auto* col : columns)
    if (col->size() != rows)
      throw std::invalid_argument("write_table_csv: ragged columns");
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << format_double((*columns[c])[r]);
    out << "\n";
  }
}

}  // namespace siv
