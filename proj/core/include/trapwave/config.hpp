#ifndef TRAPWAVE_CONFIG_HPP
#define TRAPWAVE_CONFIG_HPP

#include <filesystem>
#include <string>

#include "trapwave/geometry.hpp"

namespace trapwave {

// Key/value trap description, units mandatory on dimensioned quantities:
//
//   segment_count_per_wing = 32
//   segment_width = 250 um
//   segment_gap = 30 um
//   wing_offset = 0 um
//   electrode_height = 2 mm
//   electrode_width = 200 um
//   electrode_to_axis_distance = 300 um
//   v_max = 10 V
//   dac_bits = 16
//   panels_per_electrode = 8 4
//
// '#' starts a comment. Unknown keys and missing units are configuration
// errors naming the key.
TrapConfig parse_trap_config(const std::string& text);
TrapConfig load_trap_config(const std::filesystem::path& path);

std::string default_config_text();

}  // namespace trapwave

#endif
