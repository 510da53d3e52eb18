#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specdiff::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
  bool markers = false;  ///< scatter points instead of a polyline
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Static line/scatter plot. The first line is a version comment; the rest
/// depends only on the data.
void write(std::ostream& out, const Plot& plot);

/// Several plots stacked vertically in one file.
void write_panels(std::ostream& out, const std::vector<Plot>& panels);

}  // namespace specdiff::svg
