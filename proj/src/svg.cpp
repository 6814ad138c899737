#include "ppmlab/svg.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace ppmlab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Linear interpolation of the level crossing between two grid corners.
double crossing(double a, double b, double level) {
    const double denom = b - a;
    if (std::abs(denom) < 1e-300) return 0.5;
    double f = (level - a) / denom;
    return std::min(std::max(f, 0.0), 1.0);
}

} // namespace

std::vector<std::array<double, 4>> marching_squares(const GridDensity& grid, double level) {
    const int ny = static_cast<int>(grid.ys.size());
    const int nx = static_cast<int>(grid.xs.size());
    require(grid.values.rows() == ny && grid.values.cols() == nx,
            "marching_squares: grid shape mismatch");
    std::vector<std::array<double, 4>> segments;

    for (int i = 0; i + 1 < ny; ++i) {
        for (int j = 0; j + 1 < nx; ++j) {
            const double v00 = grid.values(i, j);         // (x_j, y_i)
            const double v10 = grid.values(i, j + 1);     // (x_{j+1}, y_i)
            const double v01 = grid.values(i + 1, j);     // (x_j, y_{i+1})
            const double v11 = grid.values(i + 1, j + 1); // (x_{j+1}, y_{i+1})
            const double x0 = grid.xs[j], x1 = grid.xs[j + 1];
            const double y0 = grid.ys[i], y1 = grid.ys[i + 1];

            int idx = 0;
            if (v00 > level) idx |= 1;
            if (v10 > level) idx |= 2;
            if (v11 > level) idx |= 4;
            if (v01 > level) idx |= 8;
            if (idx == 0 || idx == 15) continue;

            // edge midpoints with interpolation: bottom, right, top, left
            const double bx = x0 + crossing(v00, v10, level) * (x1 - x0);
            const double rx = y0 + crossing(v10, v11, level) * (y1 - y0);
            const double tx = x0 + crossing(v01, v11, level) * (x1 - x0);
            const double lx = y0 + crossing(v00, v01, level) * (y1 - y0);
            const std::array<double, 2> bottom{bx, y0}, right{x1, rx}, top{tx, y1}, left{x0, lx};

            auto emit = [&](const std::array<double, 2>& a, const std::array<double, 2>& b) {
                segments.push_back({a[0], a[1], b[0], b[1]});
            };
            switch (idx) {
                case 1: case 14: emit(left, bottom); break;
                case 2: case 13: emit(bottom, right); break;
                case 3: case 12: emit(left, right); break;
                case 4: case 11: emit(right, top); break;
                case 6: case 9: emit(bottom, top); break;
                case 7: case 8: emit(left, top); break;
                case 5: // saddle: resolve by cell average
                case 10: {
                    const double avg = 0.25 * (v00 + v10 + v01 + v11);
                    const bool flip = (avg > level) == (idx == 5);
                    if (flip) {
                        emit(left, top);
                        emit(bottom, right);
                    } else {
                        emit(left, bottom);
                        emit(right, top);
                    }
                    break;
                }
                default: break;
            }
        }
    }
    return segments;
}

std::string render_figure(const std::vector<FigurePanel>& panels, int panel_px) {
    require(!panels.empty(), "render_figure: no panels");
    const int margin = 34;
    const int width = static_cast<int>(panels.size()) * (panel_px + margin) + margin;
    const int height = panel_px + 2 * margin + 14;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const FigurePanel& panel = panels[p];
        const double ox = margin + p * (panel_px + margin);
        const double oy = margin;
        const double sx = panel_px / (panel.x_hi - panel.x_lo);
        const double sy = panel_px / (panel.y_hi - panel.y_lo);
        auto px = [&](double x) { return ox + (x - panel.x_lo) * sx; };
        auto py = [&](double y) { return oy + (panel.y_hi - y) * sy; };

        svg << "<rect x=\"" << fmt(ox) << "\" y=\"" << fmt(oy) << "\" width=\"" << panel_px
            << "\" height=\"" << panel_px
            << "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << fmt(ox + panel_px / 2.0) << "\" y=\"" << fmt(oy - 10.0)
            << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
            << panel.title << "</text>\n";

        for (const auto& seg : panel.contour_segments) {
            svg << "<line x1=\"" << fmt(px(seg[0])) << "\" y1=\"" << fmt(py(seg[1]))
                << "\" x2=\"" << fmt(px(seg[2])) << "\" y2=\"" << fmt(py(seg[3]))
                << "\" stroke=\"#4477aa\" stroke-width=\"0.8\"/>\n";
        }
        for (const auto& pt : panel.points) {
            if (pt.first < panel.x_lo || pt.first > panel.x_hi || pt.second < panel.y_lo ||
                pt.second > panel.y_hi)
                continue;
            svg << "<circle cx=\"" << fmt(px(pt.first)) << "\" cy=\"" << fmt(py(pt.second))
                << "\" r=\"2.6\" fill=\"#cc3311\" fill-opacity=\"0.75\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace ppmlab
