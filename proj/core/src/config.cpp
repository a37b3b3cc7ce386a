#include "trapwave/config.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "trapwave/errors.hpp"

namespace trapwave {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    return s.substr(a, b - a + 1);
}

double unit_scale_length(const std::string& unit, const std::string& key) {
    if (unit == "m") return 1.0;
    if (unit == "mm") return 1e-3;
    if (unit == "um") return 1e-6;
    if (unit == "nm") return 1e-9;
    throw ConfigError(key + ": unknown length unit '" + unit + "' (use m/mm/um/nm)");
}

double unit_scale_voltage(const std::string& unit, const std::string& key) {
    if (unit == "V") return 1.0;
    if (unit == "mV") return 1e-3;
    throw ConfigError(key + ": unknown voltage unit '" + unit + "' (use V/mV)");
}

struct RawValue {
    double number = 0.0;
    std::string unit;
    std::string extra;  // second token for integer pairs
};

RawValue parse_value(const std::string& value, const std::string& key) {
    std::istringstream is(value);
    RawValue raw;
    if (!(is >> raw.number))
        throw ConfigError(key + ": cannot parse value '" + value + "'");
    is >> raw.unit;
    is >> raw.extra;
    std::string rest;
    if (is >> rest)
        throw ConfigError(key + ": trailing content in '" + value + "'");
    return raw;
}

double length_value(const RawValue& raw, const std::string& key) {
    if (raw.unit.empty())
        throw ConfigError(key + ": unit is mandatory (m/mm/um/nm)");
    return raw.number * unit_scale_length(raw.unit, key);
}

int int_value(const RawValue& raw, const std::string& key) {
    if (!raw.unit.empty())
        throw ConfigError(key + ": no unit expected");
    const auto i = static_cast<int>(raw.number);
    if (static_cast<double>(i) != raw.number)
        throw ConfigError(key + ": expected an integer");
    return i;
}

}  // namespace

TrapConfig parse_trap_config(const std::string& text) {
    TrapConfig config;
    std::map<std::string, bool> seen;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (seen[key])
            throw ConfigError(key + ": duplicate key");
        seen[key] = true;
        const RawValue raw = parse_value(value, key);

        if (key == "segment_count_per_wing") {
            config.segment_count_per_wing = int_value(raw, key);
        } else if (key == "segment_width") {
            config.segment_width = length_value(raw, key);
        } else if (key == "segment_gap") {
            config.segment_gap = length_value(raw, key);
        } else if (key == "wing_offset") {
            config.wing_offset = length_value(raw, key);
        } else if (key == "electrode_height") {
            config.electrode_height = length_value(raw, key);
        } else if (key == "electrode_width") {
            config.electrode_width = length_value(raw, key);
        } else if (key == "electrode_to_axis_distance") {
            config.electrode_to_axis_distance = length_value(raw, key);
        } else if (key == "v_max") {
            if (raw.unit.empty())
                throw ConfigError(key + ": unit is mandatory (V/mV)");
            config.v_max = raw.number * unit_scale_voltage(raw.unit, key);
        } else if (key == "dac_bits") {
            config.dac_bits = int_value(raw, key);
        } else if (key == "panels_per_electrode") {
            if (raw.unit.empty())
                throw ConfigError(key + ": expected two integers (axial transverse)");
            config.panels_axial = int_value(RawValue{raw.number, "", ""}, key);
            try {
                std::size_t pos = 0;
                config.panels_transverse = std::stoi(raw.unit, &pos);
                if (pos != raw.unit.size() || !raw.extra.empty())
                    throw std::invalid_argument(raw.unit);
            } catch (const std::exception&) {
                throw ConfigError(key + ": expected two integers (axial transverse)");
            }
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    config.validate();
    return config;
}

TrapConfig load_trap_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trap_config(buf.str());
}

std::string default_config_text() {
    return
        "# trapwave segmented-trap description\n"
        "segment_count_per_wing = 32\n"
        "segment_width = 250 um\n"
        "segment_gap = 30 um\n"
        "wing_offset = 0 um\n"
        "electrode_height = 2 mm\n"
        "electrode_width = 200 um\n"
        "electrode_to_axis_distance = 300 um\n"
        "v_max = 10 V\n"
        "dac_bits = 16\n"
        "panels_per_electrode = 8 4\n";
}

}  // namespace trapwave
