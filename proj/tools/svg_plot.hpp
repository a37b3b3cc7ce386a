#ifndef TRAPWAVE_TOOLS_SVG_PLOT_HPP
#define TRAPWAVE_TOOLS_SVG_PLOT_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace trapwave::svg {

struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool points = false;  // markers instead of a line
    std::string label;
};

namespace detail {

inline void axis_range(const std::vector<Series>& series, double& lo, double& hi,
                       bool use_y) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& s : series) {
        const auto& v = use_y ? s.y : s.x;
        for (const double val : v) {
            if (!std::isfinite(val))
                continue;
            lo = std::min(lo, val);
            hi = std::max(hi, val);
        }
    }
    if (!(lo < hi)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.06 * (hi - lo);
    lo -= pad;
    hi += pad;
}

}  // namespace detail

// One panel with shared x: frequency curve on top, residuals below.
inline std::string two_panel_plot(const std::vector<Series>& top,
                                  const std::vector<Series>& bottom,
                                  const std::string& title,
                                  const std::string& x_label,
                                  const std::string& top_label,
                                  const std::string& bottom_label) {
    const int width = 860, panel_h = 300, margin = 64, gap = 46;
    const int height = 2 * panel_h + gap + 2 * margin;
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
       << height << "' font-family='sans-serif' font-size='13'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16'>"
       << title << "</text>\n";

    auto panel = [&](const std::vector<Series>& series, int y_top,
                     const std::string& y_label, bool with_x_label) {
        double x_lo, x_hi, y_lo, y_hi;
        detail::axis_range(series, x_lo, x_hi, false);
        detail::axis_range(series, y_lo, y_hi, true);
        const int x0 = margin, x1 = width - 24;
        const int y0 = y_top + panel_h, y1 = y_top;
        auto sx = [&](double x) {
            return x0 + (x - x_lo) / (x_hi - x_lo) * (x1 - x0);
        };
        auto sy = [&](double y) {
            return y0 - (y - y_lo) / (y_hi - y_lo) * (y0 - y1);
        };
        os << "<rect x='" << x0 << "' y='" << y1 << "' width='" << (x1 - x0)
           << "' height='" << (y0 - y1) << "' fill='none' stroke='#888'/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
            const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
            os << "<text x='" << sx(xv) << "' y='" << y0 + 18
               << "' text-anchor='middle' fill='#444'>" << xv << "</text>\n";
            os << "<text x='" << x0 - 6 << "' y='" << sy(yv) + 4
               << "' text-anchor='end' fill='#444'>" << yv << "</text>\n";
            os << "<line x1='" << x0 << "' y1='" << sy(yv) << "' x2='" << x1
               << "' y2='" << sy(yv) << "' stroke='#eee'/>\n";
        }
        int legend_y = y1 + 16;
        for (const auto& s : series) {
            if (s.points) {
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    if (!std::isfinite(s.y[i]))
                        continue;
                    os << "<circle cx='" << sx(s.x[i]) << "' cy='" << sy(s.y[i])
                       << "' r='2.4' fill='" << s.color << "'/>\n";
                }
            } else {
                os << "<polyline fill='none' stroke='" << s.color
                   << "' stroke-width='1.6' points='";
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    if (!std::isfinite(s.y[i]))
                        continue;
                    os << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
                }
                os << "'/>\n";
            }
            if (!s.label.empty()) {
                os << "<text x='" << x1 - 8 << "' y='" << legend_y
                   << "' text-anchor='end' fill='" << s.color << "'>" << s.label
                   << "</text>\n";
                legend_y += 16;
            }
        }
        os << "<text x='" << x0 - 48 << "' y='" << (y0 + y1) / 2
           << "' transform='rotate(-90 " << x0 - 48 << " " << (y0 + y1) / 2
           << ")' text-anchor='middle'>" << y_label << "</text>\n";
        if (with_x_label)
            os << "<text x='" << (x0 + x1) / 2 << "' y='" << y0 + 40
               << "' text-anchor='middle'>" << x_label << "</text>\n";
    };

    panel(top, margin, top_label, false);
    panel(bottom, margin + panel_h + gap, bottom_label, true);
    os << "</svg>\n";
    return os.str();
}

}  // namespace trapwave::svg

#endif
