#ifndef TRAPWAVE_GEOMETRY_HPP
#define TRAPWAVE_GEOMETRY_HPP

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace trapwave {

// Segmented two-wing dc trap. Wing 0 faces the axis from x = +d, wing 1 from
// x = -d; segment centers advance along z with pitch = width + gap, and the
// second wing may be shifted axially by wing_offset. All lengths in meters.
struct TrapConfig {
    int segment_count_per_wing = 32;
    double segment_width = 250e-6;
    double segment_gap = 30e-6;
    double wing_offset = 0.0;
    double electrode_height = 2e-3;   // transverse (y) extent of the plate face
    double electrode_width = 200e-6;  // metal depth behind the face; not part of the thin-plate BEM
    double electrode_to_axis_distance = 300e-6;
    double v_max = 10.0;
    int dac_bits = 16;
    int panels_axial = 8;       // panel subdivisions along z
    int panels_transverse = 4;  // panel subdivisions along y

    // Throws ConfigError naming the offending field.
    void validate() const;

    double pitch() const { return segment_width + segment_gap; }
    int electrode_count() const { return 2 * segment_count_per_wing; }
    int panels_per_electrode() const { return panels_axial * panels_transverse; }
    // Axial center of segment i (1-based) of the given wing, relative to the wing origin z=0.
    double segment_center(int wing, int i) const;

    // FNV-1a over the canonical key=value serialization; keys cache files to configs.
    std::uint64_t content_hash() const;
    std::string canonical_text() const;
};

// Rectangle panel with uniform charge density. axis_u x axis_v = outward normal.
struct Panel {
    Eigen::Vector3d center;
    Eigen::Vector3d axis_u;
    Eigen::Vector3d axis_v;
    double half_u = 0.0;
    double half_v = 0.0;

    double area() const { return 4.0 * half_u * half_v; }
    std::array<Eigen::Vector3d, 4> corners() const;
};

struct Electrode {
    int index = 0;  // 1..N
    int wing = 0;   // 0 or 1
    double center_z = 0.0;
    std::size_t panel_begin = 0;  // [panel_begin, panel_end) into TrapModel::panels
    std::size_t panel_end = 0;
};

struct TrapModel {
    TrapConfig config;
    std::vector<Electrode> electrodes;
    std::vector<Panel> panels;

    int electrode_count() const { return static_cast<int>(electrodes.size()); }
    std::size_t panel_count() const { return panels.size(); }
};

TrapModel build_trap(const TrapConfig& config);

// Uniform axial grid z_j = start + j*step, j = 0..count-1.
struct Grid {
    double start = 0.0;
    double step = 0.0;
    Eigen::Index count = 0;

    double z(Eigen::Index j) const { return start + step * static_cast<double>(j); }
    double back() const { return z(count - 1); }
    Eigen::Index nearest_index(double z_value) const;
    bool contains(double z_value) const;
    Eigen::VectorXd z_values() const;
};

// M = floor((z_end - z_start)/step) + 1 points; requires M >= 2.
Grid axial_grid(double z_start, double z_end, double step);

}  // namespace trapwave

#endif
