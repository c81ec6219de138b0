#pragma once

#include <string>
#include <vector>

namespace wirefit {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Deterministic standalone SVG line chart: fixed viewport, font stack,
// palette, and id scheme, values formatted with %.6g so identical inputs
// yield identical bytes.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<Series>& series);

}  // namespace wirefit
