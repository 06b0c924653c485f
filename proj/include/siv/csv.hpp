#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace siv {

// Shortest representation that round-trips the exact double value.
std::string format_double(double v);

struct XyData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;  // empty when the file has two columns
};

// Reads (x, y[, sigma]) rows, comma separated. A leading non-numeric line
// is treated as a header; '#' lines are comments.
XyData read_xy_csv(std::istream& in, const std::string& source_name = "csv");

// Writes aligned columns with a header row. All columns must share a length.
void write_table_csv(std::ostream& out,
                     const std::vector<std::string>& headers,
                     const std::vector<const std::vector<double>*>& columns);

}  // namespace siv
