#include "taskdialog/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace taskdialog::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 60;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
         "</text>\n";
}

std::string axes(const std::string& x_label, const std::string& y_label, double y_max) {
  double x0 = kLeft, y0 = kHeight - kBottom, x1 = kWidth - kRight, y1 = kTop;
  std::string out;
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 15) + "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
  out += "<text x=\"15\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         num((y0 + y1) / 2) + ")\">" + escape(y_label) + "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    double v = y_max * k / 4.0;
    double y = y0 - (y0 - y1) * k / 4.0;
    out += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + num(v) + "</text>\n";
  }
  return out;
}

}  // namespace

std::string histogram(const std::vector<double>& values, double lo, double hi, int bins, const std::string& title,
                      const std::string& x_label) {
  bins = std::max(bins, 1);
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  const double width = (hi - lo) / bins;
  for (double v : values) {
    int b = width > 0 ? static_cast<int>(std::floor((v - lo) / width)) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  int max_count = std::max(1, *std::max_element(counts.begin(), counts.end()));
  std::string out = header(title) + axes(x_label, "count", max_count);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double bar_w = plot_w / bins;
  for (int b = 0; b < bins; ++b) {
    double h = plot_h * counts[static_cast<std::size_t>(b)] / max_count;
    double x = kLeft + b * bar_w;
    out += "<rect x=\"" + num(x + 1) + "\" y=\"" + num(kHeight - kBottom - h) + "\" width=\"" + num(bar_w - 2) +
           "\" height=\"" + num(h) + "\" fill=\"steelblue\"/>\n";
    if (bins <= 12 || b % (bins / 8 + 1) == 0)
      out += "<text x=\"" + num(x) + "\" y=\"" + num(kHeight - kBottom + 16) + "\" text-anchor=\"middle\">" +
             num(lo + b * width) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string bar_chart(const std::vector<Bar>& bars, const std::string& title, const std::string& y_label) {
  double max_v = 1e-12;
  for (const auto& b : bars) max_v = std::max(max_v, b.value);
  std::string out = header(title) + axes("", y_label, max_v);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double bar_w = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    double h = plot_h * bars[i].value / max_v;
    double x = kLeft + static_cast<double>(i) * bar_w;
    out += "<rect x=\"" + num(x + 2) + "\" y=\"" + num(kHeight - kBottom - h) + "\" width=\"" + num(bar_w - 4) +
           "\" height=\"" + num(h) + "\" fill=\"darkorange\"/>\n";
    out += "<text x=\"" + num(x + bar_w / 2) + "\" y=\"" + num(kHeight - kBottom + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + escape(bars[i].label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string line_chart(const std::vector<std::pair<double, double>>& points, const std::string& title,
                       const std::string& x_label, const std::string& y_label) {
  double x_min = 0, x_max = 1, y_max = 1e-12;
  if (!points.empty()) {
    x_min = points.front().first;
    x_max = points.front().first;
    for (const auto& [x, y] : points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1;
  std::string out = header(title) + axes(x_label, y_label, y_max);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  std::string poly;
  for (const auto& [x, y] : points) {
    double px = kLeft + plot_w * (x - x_min) / (x_max - x_min);
    double py = kHeight - kBottom - plot_h * y / y_max;
    poly += num(px) + "," + num(py) + " ";
    out += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"3\" fill=\"seagreen\"/>\n";
    out += "<text x=\"" + num(px) + "\" y=\"" + num(kHeight - kBottom + 16) + "\" text-anchor=\"middle\" font-size=\"10\">" +
           num(x).substr(0, num(x).find('.')) + "</text>\n";
  }
  out += "<polyline points=\"" + poly + "\" fill=\"none\" stroke=\"seagreen\" stroke-width=\"2\"/>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace taskdialog::svg
