#include "trapwave/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "trapwave/constants.hpp"
#include "trapwave/errors.hpp"
#include "trapwave/io.hpp"

namespace trapwave {

void TrapConfig::validate() const {
    if (segment_count_per_wing < 1)
        throw ConfigError("segment_count_per_wing must be >= 1");
    if (!(segment_width > 0))
        throw ConfigError("segment_width must be > 0");
    if (!(segment_gap >= 0))
        throw ConfigError("segment_gap must be >= 0");
    if (!std::isfinite(wing_offset))
        throw ConfigError("wing_offset must be finite");
    if (!(electrode_height > 0))
        throw ConfigError("electrode_height must be > 0");
    if (!(electrode_width > 0))
        throw ConfigError("electrode_width must be > 0");
    if (!(electrode_to_axis_distance > 0))
        throw ConfigError("electrode_to_axis_distance must be > 0");
    if (!(v_max > 0))
        throw ConfigError("v_max must be > 0");
    if (dac_bits < 1)
        throw ConfigError("dac_bits must be >= 1");
    if (panels_axial < 1 || panels_transverse < 1)
        throw ConfigError("panels_per_electrode entries must be >= 1");
}

double TrapConfig::segment_center(int wing, int i) const {
    double c = static_cast<double>(i - 1) * pitch();
    if (wing == 1)
        c += wing_offset;
    return c;
}

std::string TrapConfig::canonical_text() const {
    std::ostringstream os;
    char buf[64];
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << key << "=" << buf << "\n";
    };
    os << "segment_count_per_wing=" << segment_count_per_wing << "\n";
    put("segment_width", segment_width);
    put("segment_gap", segment_gap);
    put("wing_offset", wing_offset);
    put("electrode_height", electrode_height);
    put("electrode_width", electrode_width);
    put("electrode_to_axis_distance", electrode_to_axis_distance);
    put("v_max", v_max);
    os << "dac_bits=" << dac_bits << "\n";
    os << "panels_per_electrode=" << panels_axial << " " << panels_transverse << "\n";
    return os.str();
}

std::uint64_t TrapConfig::content_hash() const {
    return fnv1a64(canonical_text());
}

std::array<Eigen::Vector3d, 4> Panel::corners() const {
    return {center - half_u * axis_u - half_v * axis_v,
            center + half_u * axis_u - half_v * axis_v,
            center + half_u * axis_u + half_v * axis_v,
            center - half_u * axis_u + half_v * axis_v};
}

namespace {

// Cosine-graded subdivision: panels shrink toward the edges where the
// surface charge density peaks.
std::vector<double> graded_edges(double lo, double hi, int n) {
    std::vector<double> e(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        double t = constants::pi * static_cast<double>(k) / static_cast<double>(n);
        e[static_cast<std::size_t>(k)] = lo + (hi - lo) * 0.5 * (1.0 - std::cos(t));
    }
    e.front() = lo;
    e.back() = hi;
    return e;
}

}  // namespace

TrapModel build_trap(const TrapConfig& config) {
    config.validate();

    TrapModel model;
    model.config = config;
    const int per_wing = config.segment_count_per_wing;
    const double d = config.electrode_to_axis_distance;
    const double h = config.electrode_height;
    const double w = config.segment_width;

    model.electrodes.reserve(static_cast<std::size_t>(config.electrode_count()));
    model.panels.reserve(static_cast<std::size_t>(config.electrode_count()) *
                         static_cast<std::size_t>(config.panels_per_electrode()));

    int index = 0;
    for (int wing = 0; wing < 2; ++wing) {
        const double x = (wing == 0) ? d : -d;
        // Outward normal points away from the axis: +x for wing 0, -x for wing 1.
        // axis_u along y, axis_v chosen so u x v = normal.
        const Eigen::Vector3d axis_u(0.0, 1.0, 0.0);
        const Eigen::Vector3d axis_v(0.0, 0.0, (wing == 0) ? 1.0 : -1.0);
        for (int i = 1; i <= per_wing; ++i) {
            Electrode e;
            e.index = ++index;
            e.wing = wing;
            e.center_z = config.segment_center(wing, i);
            e.panel_begin = model.panels.size();

            const auto ye = graded_edges(-h / 2.0, h / 2.0, config.panels_transverse);
            const auto ze = graded_edges(e.center_z - w / 2.0, e.center_z + w / 2.0,
                                         config.panels_axial);
            for (int iz = 0; iz < config.panels_axial; ++iz) {
                for (int iy = 0; iy < config.panels_transverse; ++iy) {
                    Panel p;
                    const double y0 = ye[static_cast<std::size_t>(iy)];
                    const double y1 = ye[static_cast<std::size_t>(iy) + 1];
                    const double z0 = ze[static_cast<std::size_t>(iz)];
                    const double z1 = ze[static_cast<std::size_t>(iz) + 1];
                    p.center = Eigen::Vector3d(x, 0.5 * (y0 + y1), 0.5 * (z0 + z1));
                    p.axis_u = axis_u;
                    p.axis_v = axis_v;
                    p.half_u = 0.5 * (y1 - y0);
                    p.half_v = 0.5 * (z1 - z0);
                    model.panels.push_back(p);
                }
            }
            e.panel_end = model.panels.size();
            model.electrodes.push_back(e);
        }
    }
    return model;
}

Eigen::Index Grid::nearest_index(double z_value) const {
    if (count <= 0 || step <= 0)
        return 0;
    auto j = static_cast<Eigen::Index>(std::llround((z_value - start) / step));
    if (j < 0) j = 0;
    if (j >= count) j = count - 1;
    return j;
}

bool Grid::contains(double z_value) const {
    const double tol = 1e-9 * step;
    return z_value >= start - tol && z_value <= back() + tol;
}

Eigen::VectorXd Grid::z_values() const {
    Eigen::VectorXd v(count);
    for (Eigen::Index j = 0; j < count; ++j)
        v[j] = z(j);
    return v;
}

Grid axial_grid(double z_start, double z_end, double step) {
    if (!(step > 0))
        throw ArgumentError("axial_grid: step must be > 0");
    if (!(z_start < z_end))
        throw ArgumentError("axial_grid: z_start must be < z_end");
    // snap near-integer span/step ratios so the end point is not lost to
    // floating rounding
    const auto count =
        static_cast<Eigen::Index>(std::floor((z_end - z_start) / step + 1e-9)) + 1;
    if (count < 2)
        throw ArgumentError("axial_grid: grid must contain at least 2 points");
    Grid g;
    g.start = z_start;
    g.step = step;
    g.count = count;
    return g;
}

}  // namespace trapwave
