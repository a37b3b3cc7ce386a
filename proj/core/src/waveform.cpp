#include "trapwave/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trapwave/constants.hpp"
#include "trapwave/errors.hpp"

namespace trapwave {

Species Species::calcium40() {
    return from_amu_e(40.0, 1.0);
}

Species Species::from_amu_e(double amu, double charge_e) {
    if (!(amu > 0) || !(charge_e > 0))
        throw ArgumentError("species: mass and charge must be > 0");
    return Species{amu * constants::atomic_mass_unit,
                   charge_e * constants::elementary_charge};
}

double FrequencyProfile::omega_at(double z) const {
    const double omega =
        mean_omega *
        (1.0 + modulation_amplitude *
                   std::sin(2.0 * constants::pi * (z - phase_origin) / modulation_period));
    if (!(omega > 0))
        throw ArgumentError("frequency profile: omega(z) must stay positive");
    return omega;
}

double well_curvature(double omega, const Species& species) {
    return species.mass * omega * omega / species.charge;
}

RowWindow window_rows(const Grid& grid, double z_center, double window_width) {
    if (!(window_width > 0))
        throw ArgumentError("window width must be > 0");
    if (!grid.contains(z_center))
        throw ArgumentError("window center outside the grid");
    const Eigen::Index jc = grid.nearest_index(z_center);
    const auto half = static_cast<Eigen::Index>(
        std::floor(window_width / (2.0 * grid.step) + 1e-9));
    RowWindow win;
    win.first = jc - half;
    win.count = 2 * half + 1;
    return win;
}

TargetPotential target_well(double z_center, double omega, const Species& species,
                            double window_width, const Grid& grid) {
    if (!(omega >= 0))
        throw ArgumentError("target_well: omega must be >= 0");
    const RowWindow win = window_rows(grid, z_center, window_width);
    if (win.count < 7)
        throw ArgumentError("target_well: window covers fewer than 7 grid points");
    if (win.first < 0 || win.first + win.count > grid.count)
        throw ArgumentError("target_well: window does not fit inside the grid");

    const double curvature = well_curvature(omega, species);
    TargetPotential target;
    target.window = win;
    target.values.resize(win.count);
    for (Eigen::Index r = 0; r < win.count; ++r) {
        const double dz = grid.z(win.first + r) - z_center;
        target.values[r] = 0.5 * curvature * dz * dz;
    }
    return target;
}

Waveform compile_waveform(const TrapModel& trap, const PotentialMatrix& a,
                          double z_start, double z_end,
                          const FrequencyProfile& profile, const Species& species,
                          const CompileOptions& options) {
    if (!(options.frame_spacing > 0))
        throw ArgumentError("compile_waveform: frame spacing must be > 0");
    const double lo = std::min(z_start, z_end);
    const double hi = std::max(z_start, z_end);
    if (!a.grid.contains(lo) || !a.grid.contains(hi))
        throw ArgumentError("compile_waveform: transport range outside the grid");
    const double direction = (z_end >= z_start) ? 1.0 : -1.0;
    const double v_max = trap.config.v_max;

    Waveform wave;
    wave.frame_spacing = options.frame_spacing;
    wave.frame_period = options.frame_period;
    wave.window_width = options.window_width;
    wave.species = species;
    wave.v_max = v_max;
    wave.dac_bits = trap.config.dac_bits;
    wave.config_hash = a.config_hash;

    VoltageSet v_prev = VoltageSet::Zero(a.entries.cols());
    const double span = std::abs(z_end - z_start);
    const auto full_steps =
        static_cast<long long>(std::floor(span / options.frame_spacing + 1e-9));
    const bool tail = span - static_cast<double>(full_steps) * options.frame_spacing >
                      1e-12 * options.frame_spacing;
    const long long n_frames = full_steps + 1 + (tail ? 1 : 0);
    for (long long k = 0; k < n_frames; ++k) {
        const double z_k =
            (k <= full_steps)
                ? z_start + direction * static_cast<double>(k) * options.frame_spacing
                : z_end;
        const double omega = profile.omega_at(z_k);
        const TargetPotential target =
            target_well(z_k, omega, species, options.window_width, a.grid);
        const SvdFactors factors =
            decompose(a.entries.middleRows(target.window.first, target.window.count));

        WaveformFrame frame;
        frame.z_target = z_k;
        frame.omega_target = omega;
        if (options.fixed_alpha) {
            SolveResult r = continuity_apply(factors, target, *options.fixed_alpha,
                                             v_prev);
            frame.voltages = std::move(r.voltages);
            frame.alpha = *options.fixed_alpha;
            const double max_v = frame.voltages.cwiseAbs().maxCoeff();
            if (max_v > v_max)
                throw InfeasibleError("compile_waveform: fixed alpha infeasible at z = " +
                                          std::to_string(z_k),
                                      max_v, 0.0);
            frame.residual_norm = window_residual(factors, target, frame.voltages);
        } else {
            try {
                AlphaSelection sel = select_alpha(factors, target, v_prev, v_max);
                frame.voltages = std::move(sel.voltages);
                frame.alpha = sel.alpha;
                frame.residual_norm = sel.residual_norm;
            } catch (const InfeasibleError& err) {
                throw InfeasibleError("compile_waveform: infeasible frame at z = " +
                                          std::to_string(z_k) + ": " + err.what(),
                                      err.best_max_voltage, err.best_residual);
            }
        }
        if (options.use_history)
            v_prev = frame.voltages;
        wave.frames.push_back(std::move(frame));
    }
    return wave;
}

VoltageSet interpolate(const Waveform& w, double z) {
    if (w.frames.empty())
        throw ArgumentError("interpolate: empty waveform");
    const auto& frames = w.frames;
    const double z_first = frames.front().z_target;
    const double z_last = frames.back().z_target;
    const double lo = std::min(z_first, z_last);
    const double hi = std::max(z_first, z_last);
    const double tol = 1e-12;
    if (z < lo - tol || z > hi + tol)
        throw ArgumentError("interpolate: position outside the waveform range");
    if (frames.size() == 1)
        return frames.front().voltages;

    // Frames are ordered in transport direction; scan for the bracketing pair.
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
        const double za = frames[k].z_target;
        const double zb = frames[k + 1].z_target;
        const double seg_lo = std::min(za, zb);
        const double seg_hi = std::max(za, zb);
        if (z >= seg_lo - tol && z <= seg_hi + tol) {
            const double span = zb - za;
            double t = (span == 0.0) ? 0.0 : (z - za) / span;
            t = std::clamp(t, 0.0, 1.0);
            return (1.0 - t) * frames[k].voltages + t * frames[k + 1].voltages;
        }
    }
    throw ArgumentError("interpolate: position not bracketed by frames");
}

DacFrame quantize(const VoltageSet& v, int bits, double v_max) {
    if (bits < 1 || bits > 31)
        throw ArgumentError("quantize: bits must be in 1..31");
    if (!(v_max > 0))
        throw ArgumentError("quantize: v_max must be > 0");
    if (v.size() && v.cwiseAbs().maxCoeff() > v_max)
        throw ArgumentError("quantize: voltage exceeds v_max");

    const auto levels = static_cast<std::uint32_t>(1u << bits);
    DacFrame frame;
    frame.bits = bits;
    frame.v_max = v_max;
    frame.lsb = 2.0 * v_max / static_cast<double>(levels);
    frame.codes.resize(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        auto code = static_cast<long long>(std::llround((v[i] + v_max) / frame.lsb));
        code = std::clamp<long long>(code, 0, static_cast<long long>(levels) - 1);
        frame.codes[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(code);
    }
    return frame;
}

VoltageSet dac_decode(const DacFrame& frame) {
    VoltageSet v(static_cast<Eigen::Index>(frame.codes.size()));
    for (std::size_t i = 0; i < frame.codes.size(); ++i)
        v[static_cast<Eigen::Index>(i)] =
            static_cast<double>(frame.codes[i]) * frame.lsb - frame.v_max;
    return v;
}

}  // namespace trapwave
