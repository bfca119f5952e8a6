#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace spm::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // half-length of the error bar; empty = none
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// Writes a facet grid of line panels with shared legend. Colors follow
/// the series order; every series label appearing anywhere in the grid
/// gets one legend entry.
void write_panel_grid(const std::filesystem::path& path,
                      const std::vector<std::vector<Panel>>& panel_rows,
                      const std::string& title);

}  // namespace spm::svg
