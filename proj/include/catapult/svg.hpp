#pragma once

// Self-contained SVG plots: line/point charts for time series and heatmaps
// for phase-space fields.

#include <string>
#include <vector>

#include "catapult/hilbert.hpp"

namespace catapult::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = {};  // empty: palette
  bool points = false;
  bool dashed = false;
};

struct LinePlot {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  bool log_y = false;
  int width = 640, height = 420;
};

struct Heatmap {
  std::string title, xlabel = "Re(alpha)", ylabel = "Im(alpha)";
  PhaseSpaceField field;
  /// Diverging blue-white-red scale around zero (Wigner, differences).
  bool diverging = false;
  int width = 480, height = 440;
};

/// Throws invalid_argument on empty data.
std::string render(const LinePlot& plot);
std::string render(const Heatmap& map);

void save(const std::string& path, const std::string& document);

}  // namespace catapult::svg
