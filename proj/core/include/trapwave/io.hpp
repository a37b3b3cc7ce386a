#ifndef TRAPWAVE_IO_HPP
#define TRAPWAVE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "trapwave/fields.hpp"
#include "trapwave/probe.hpp"
#include "trapwave/solver.hpp"
#include "trapwave/waveform.hpp"

namespace trapwave {

inline constexpr const char* tool_version = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t file_digest(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

// write-temp-then-rename; all writers below go through this
void atomic_write(const std::filesystem::path& path, const std::string& content);

// Binary A-matrix cache: magic, version, config hash, dimensions, grid, then
// row-major doubles (native endianness).
void write_matrix_cache(const std::filesystem::path& path, const PotentialMatrix& a);
PotentialMatrix read_matrix_cache(const std::filesystem::path& path);

void write_waveform_csv(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform_csv(const std::filesystem::path& path);

void write_report_csv(const std::filesystem::path& path, const ProbeReport& report,
                      std::uint64_t config_hash, const std::string& method);

// Voltage set file: electrode index, volts.
void write_voltages_csv(const std::filesystem::path& path, const VoltageSet& v);
VoltageSet read_voltages_csv(const std::filesystem::path& path);

// Target potential file: z_m, phi_V rows; rows are matched to consecutive grid
// rows (each z must sit on a grid point within 1e-6 * step).
void write_target_csv(const std::filesystem::path& path, const Grid& grid,
                      const TargetPotential& target);
TargetPotential read_target_csv(const std::filesystem::path& path, const Grid& grid);

// DAC export: one row per frame, integer codes; lsb and bits in the header.
void write_dac_csv(const std::filesystem::path& path, const Waveform& w);

struct RunManifest {
    std::string command;
    std::string created_utc;
    std::uint64_t config_hash = 0;
    std::vector<std::pair<std::string, std::uint64_t>> inputs;   // path, digest
    std::vector<std::pair<std::string, std::uint64_t>> outputs;  // path, digest
};

// Written as <output>.manifest.json next to the primary output.
void write_manifest(const std::filesystem::path& primary_output,
                    const RunManifest& manifest);

}  // namespace trapwave

#endif
