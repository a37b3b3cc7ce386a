#ifndef TRAPWAVE_WAVEFORM_HPP
#define TRAPWAVE_WAVEFORM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "trapwave/fields.hpp"
#include "trapwave/solver.hpp"

namespace trapwave {

struct Species {
    double mass = 0.0;    // kg
    double charge = 0.0;  // C

    static Species calcium40();
    static Species from_amu_e(double amu, double charge_e);
};

// omega(z) = mean * (1 + amplitude * sin(2 pi (z - phase_origin) / period))
struct FrequencyProfile {
    double mean_omega = 0.0;  // rad/s
    double modulation_amplitude = 0.0;
    double modulation_period = 280e-6;
    double phase_origin = 0.0;

    double omega_at(double z) const;
};

// Harmonic target phi(z) = (m omega^2 / 2 q) (z - z_center)^2 on the window
// rows nearest z_center. Window must cover at least 7 grid points and lie
// inside the grid.
TargetPotential target_well(double z_center, double omega, const Species& species,
                            double window_width, const Grid& grid);

double well_curvature(double omega, const Species& species);  // m omega^2 / q

struct WaveformFrame {
    double z_target = 0.0;
    double omega_target = 0.0;
    double alpha = 0.0;
    double residual_norm = 0.0;
    VoltageSet voltages;
};

struct Waveform {
    std::vector<WaveformFrame> frames;
    double frame_spacing = 5e-6;
    double frame_period = 3.3e-3;  // export metadata; transport uses it
    double window_width = 200e-6;
    Species species;
    double v_max = 10.0;
    int dac_bits = 16;
    std::uint64_t config_hash = 0;

    std::size_t size() const { return frames.size(); }
};

struct CompileOptions {
    double window_width = 200e-6;
    double frame_spacing = 5e-6;
    double frame_period = 3.3e-3;
    // Testing hooks: pin alpha (skip the ladder) and/or drop the frame-to-frame
    // history coupling.
    std::optional<double> fixed_alpha;
    bool use_history = true;
};

Waveform compile_waveform(const TrapModel& trap, const PotentialMatrix& a,
                          double z_start, double z_end,
                          const FrequencyProfile& profile, const Species& species,
                          const CompileOptions& options = {});

// Per-channel linear interpolation between the bracketing frames.
VoltageSet interpolate(const Waveform& w, double z);

struct DacFrame {
    std::vector<std::uint32_t> codes;
    double lsb = 0.0;
    int bits = 0;
    double v_max = 0.0;
};

// lsb = 2 v_max / 2^bits; code = round((v + v_max)/lsb) clamped to
// [0, 2^bits - 1]; decode(code) = code * lsb - v_max.
DacFrame quantize(const VoltageSet& v, int bits, double v_max);
VoltageSet dac_decode(const DacFrame& frame);

// The contiguous grid rows of the solve window centered on z_center
// (deterministic index arithmetic).
RowWindow window_rows(const Grid& grid, double z_center, double window_width);

}  // namespace trapwave

#endif
