#pragma once

#include "ppmlab/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace ppmlab {

/// Regular 2D grid of density values; values(i, j) belongs to (xs[j], ys[i]).
struct GridDensity {
    std::vector<double> xs;
    std::vector<double> ys;
    Matrix values;
};

/// Iso-contour line segments (x1, y1, x2, y2) of the grid at one level,
/// extracted with marching squares and linear interpolation.
std::vector<std::array<double, 4>> marching_squares(const GridDensity& grid, double level);

struct FigurePanel {
    std::string title;
    double x_lo = -1.0, x_hi = 1.0, y_lo = -1.0, y_hi = 1.0;
    std::vector<std::array<double, 4>> contour_segments;
    std::vector<std::pair<double, double>> points;
};

/// Deterministic standalone SVG with one sub-plot per panel.
std::string render_figure(const std::vector<FigurePanel>& panels, int panel_px = 420);

} // namespace ppmlab
