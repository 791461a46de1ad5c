#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lesionbench::svg {

// Minimal deterministic SVG emitters. Coordinates are printed with three
// decimals so output is stable across platforms. Non-finite y values break
// a line into separate segments.

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool markers = false;
  /// Optional shaded band (same length as x).
  std::vector<double> band_lo;
  std::vector<double> band_hi;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;
  int ticks = 5;
};

/// Values outside the axis range are clipped to it.
std::string line_plot(const Axes& axes, const std::vector<Series>& series);

struct Bar {
  std::string label;
  double value = 0.0;
  std::string annotation;  ///< printed above the bar
};

struct BarGroup {
  std::string name;
  std::string color;
  std::vector<Bar> bars;
};

/// Grouped vertical bars; every group must have the same categories.
std::string bar_chart(const Axes& axes, const std::vector<BarGroup>& groups);

std::string table(const std::string& title, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows);

std::string escape(const std::string& text);
/// Fixed three-decimal formatting.
std::string num(double v);

}  // namespace lesionbench::svg
