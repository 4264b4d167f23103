#pragma once

#include <string>
#include <utility>
#include <vector>

namespace taskdialog::svg {

struct Bar {
  std::string label;
  double value = 0.0;
};

/// Fixed-bin histogram over [lo, hi) with `bins` bins; values outside are
/// clamped into the edge bins.
std::string histogram(const std::vector<double>& values, double lo, double hi, int bins, const std::string& title,
                      const std::string& x_label);

std::string bar_chart(const std::vector<Bar>& bars, const std::string& title, const std::string& y_label);

/// Polyline over (x, y) points, e.g. a metric against turn index.
std::string line_chart(const std::vector<std::pair<double, double>>& points, const std::string& title,
                       const std::string& x_label, const std::string& y_label);

}  // namespace taskdialog::svg
