// trap: compile segmented-trap shuttling voltages and probe them with a
// simulated single ion. Subcommands: describe, fields, solve, waveform,
// probe, export.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "trapwave/config.hpp"
#include "trapwave/constants.hpp"
#include "trapwave/errors.hpp"
#include "trapwave/fields.hpp"
#include "trapwave/io.hpp"
#include "trapwave/probe.hpp"
#include "trapwave/solver.hpp"
#include "trapwave/waveform.hpp"

#include "svg_plot.hpp"

namespace tw = trapwave;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&tt, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string join_args(int argc, char** argv) {
    std::ostringstream os;
    for (int i = 0; i < argc; ++i)
        os << (i ? " " : "") << argv[i];
    return os.str();
}

fs::path default_cache_path(std::uint64_t config_hash, const tw::Grid& grid) {
    const char* dir = std::getenv("TRAP_CACHE_DIR");
    const fs::path base = dir ? fs::path(dir) : fs::path(".");
    std::ostringstream name;
    name << tw::hex64(config_hash) << "_" << grid.count << ".amat";
    return base / name.str();
}

void check_matrix_matches_config(const tw::PotentialMatrix& a,
                                 const tw::TrapConfig& config) {
    if (a.config_hash != config.content_hash())
        throw tw::ConfigError(
            "matrix cache was assembled for a different trap config (hash " +
            tw::hex64(a.config_hash) + " vs " + tw::hex64(config.content_hash()) + ")");
}

struct GridArgs {
    double start = 0.0;
    double end = 0.0;
    double step = 5e-6;
};

void describe(const tw::TrapConfig& config) {
    const tw::TrapModel model = tw::build_trap(config);
    std::printf("trapwave trap model (config hash %s)\n",
                tw::hex64(config.content_hash()).c_str());
    std::printf("electrodes: %d (2 wings x %d), panels: %zu\n",
                model.electrode_count(), config.segment_count_per_wing,
                model.panel_count());
    std::printf("segment pitch: %.6g um, axis distance: %.6g um, v_max: %.3g V, "
                "dac: %d bit\n",
                config.pitch() * 1e6, config.electrode_to_axis_distance * 1e6,
                config.v_max, config.dac_bits);
    std::printf("%5s %5s %14s %14s %8s\n", "index", "wing", "center_z_um",
                "face_um(z x y)", "panels");
    for (const auto& e : model.electrodes) {
        std::printf("%5d %5d %14.3f %7.1f x %5.0f %8zu\n", e.index, e.wing,
                    e.center_z * 1e6, config.segment_width * 1e6,
                    config.electrode_height * 1e6, e.panel_end - e.panel_begin);
    }
}

int run(int argc, char** argv) {
    CLI::App app{"segmented-trap voltage compiler and single-ion probe"};
    app.require_subcommand(1);

    std::string config_path;
    std::string matrix_path;
    std::string out_path;

    auto* cmd_describe = app.add_subcommand("describe", "print the electrode table");
    cmd_describe->add_option("--config", config_path, "trap config file")->required();

    auto* cmd_fields =
        app.add_subcommand("fields", "solve the BEM and cache the potential matrix");
    GridArgs grid_args;
    cmd_fields->add_option("--config", config_path)->required();
    cmd_fields->add_option("--grid-start", grid_args.start, "m")->required();
    cmd_fields->add_option("--grid-end", grid_args.end, "m")->required();
    cmd_fields->add_option("--grid-step", grid_args.step, "m (default 5e-6)");
    cmd_fields->add_option("--out", out_path, "cache file (default TRAP_CACHE_DIR)");

    auto* cmd_solve = app.add_subcommand("solve", "invert a target potential");
    std::string target_path, prev_path, alpha_arg = "auto";
    cmd_solve->add_option("--config", config_path)->required();
    cmd_solve->add_option("--matrix", matrix_path, "matrix cache")->required();
    cmd_solve->add_option("--target", target_path, "target CSV (z_m,phi_V)")->required();
    cmd_solve->add_option("--alpha", alpha_arg, "'auto' or a fixed value");
    cmd_solve->add_option("--prev", prev_path, "previous voltage set CSV");
    cmd_solve->add_option("--out", out_path, "voltage set CSV")->required();

    auto* cmd_wave = app.add_subcommand("waveform", "compile a shuttling waveform");
    double from_z = 0, to_z = 0, freq_mhz = 1.4, mod_amp = 0.0, mod_period = 280e-6;
    double window = 200e-6, frame_spacing = 5e-6, frame_period = 3.3e-3;
    double mass_amu = 40.0, charge_e = 1.0;
    cmd_wave->add_option("--config", config_path)->required();
    cmd_wave->add_option("--matrix", matrix_path)->required();
    cmd_wave->add_option("--from", from_z, "start position (m)")->required();
    cmd_wave->add_option("--to", to_z, "end position (m)")->required();
    cmd_wave->add_option("--freq", freq_mhz, "mean axial frequency (MHz)");
    cmd_wave->add_option("--mod-amplitude", mod_amp, "modulation fraction");
    cmd_wave->add_option("--mod-period", mod_period, "modulation period (m)");
    cmd_wave->add_option("--window", window, "solve window width (m)");
    cmd_wave->add_option("--frame-spacing", frame_spacing, "m");
    cmd_wave->add_option("--frame-period", frame_period, "s (export metadata)");
    cmd_wave->add_option("--mass-amu", mass_amu);
    cmd_wave->add_option("--charge-e", charge_e);
    cmd_wave->add_option("--out", out_path, "waveform CSV")->required();

    auto* cmd_probe = app.add_subcommand("probe", "probe a waveform frame by frame");
    std::string wave_path, method = "both", plot_path;
    int fit_window = 7;
    double uncertainty = 0.006;
    cmd_probe->add_option("--waveform", wave_path)->required();
    cmd_probe->add_option("--matrix", matrix_path)->required();
    cmd_probe->add_option("--method", method, "curvature|dynamics|both");
    cmd_probe->add_option("--fit-window", fit_window, "odd, >= 5");
    cmd_probe->add_option("--uncertainty", uncertainty,
                          "relative spectroscopic uncertainty column");
    cmd_probe->add_option("--plot", plot_path, "optional SVG output");
    cmd_probe->add_option("--out", out_path, "report CSV")->required();
    bool allow_mismatch = false;
    cmd_probe->add_flag("--allow-matrix-mismatch", allow_mismatch,
                        "probe against a matrix from a different trap config "
                        "(misalignment studies)");

    auto* cmd_export = app.add_subcommand("export", "emit DAC codes for a waveform");
    cmd_export->add_option("--waveform", wave_path)->required();
    cmd_export->add_option("--out", out_path, "DAC CSV")->required();

    CLI11_PARSE(app, argc, argv);

    tw::RunManifest manifest;
    manifest.command = join_args(argc, argv);
    manifest.created_utc = utc_now();

    if (cmd_describe->parsed()) {
        describe(tw::load_trap_config(config_path));
        return tw::exit_code::ok;
    }

    if (cmd_fields->parsed()) {
        const tw::TrapConfig config = tw::load_trap_config(config_path);
        const tw::Grid grid =
            tw::axial_grid(grid_args.start, grid_args.end, grid_args.step);
        const tw::TrapModel model = tw::build_trap(config);
        const tw::PotentialMatrix a = tw::assemble_matrix(model, grid);
        const fs::path out = out_path.empty()
                                 ? default_cache_path(a.config_hash, grid)
                                 : fs::path(out_path);
        tw::write_matrix_cache(out, a);
        manifest.config_hash = a.config_hash;
        manifest.inputs.emplace_back(config_path, tw::file_digest(config_path));
        manifest.outputs.emplace_back(out.string(), tw::file_digest(out));
        tw::write_manifest(out, manifest);
        std::printf("wrote %s (%lld x %lld)\n", out.string().c_str(),
                    static_cast<long long>(a.entries.rows()),
                    static_cast<long long>(a.entries.cols()));
        return tw::exit_code::ok;
    }

    if (cmd_solve->parsed()) {
        const tw::TrapConfig config = tw::load_trap_config(config_path);
        const tw::PotentialMatrix a = tw::read_matrix_cache(matrix_path);
        check_matrix_matches_config(a, config);
        const tw::TargetPotential target = tw::read_target_csv(target_path, a.grid);
        tw::VoltageSet v_prev = tw::VoltageSet::Zero(a.entries.cols());
        if (!prev_path.empty()) {
            v_prev = tw::read_voltages_csv(prev_path);
            if (v_prev.size() != a.entries.cols())
                throw tw::ArgumentError("--prev has wrong electrode count");
        }
        const tw::SvdFactors factors =
            tw::decompose(a.entries.middleRows(target.window.first, target.window.count));
        tw::VoltageSet v;
        if (alpha_arg == "auto") {
            const auto sel = tw::select_alpha(factors, target, v_prev, config.v_max);
            v = sel.voltages;
            std::printf("alpha = %.6g (%d steps), residual = %.6g V, max|v| = %.6g V\n",
                        sel.alpha, sel.steps, sel.residual_norm, sel.max_abs_voltage);
        } else {
            const double alpha = std::stod(alpha_arg);
            v = tw::continuity_apply(factors, target, alpha, v_prev).voltages;
            std::printf("alpha = %.6g (fixed), residual = %.6g V, max|v| = %.6g V\n",
                        alpha, tw::window_residual(factors, target, v),
                        v.cwiseAbs().maxCoeff());
        }
        tw::write_voltages_csv(out_path, v);
        manifest.config_hash = a.config_hash;
        manifest.inputs.emplace_back(matrix_path, tw::file_digest(matrix_path));
        manifest.inputs.emplace_back(target_path, tw::file_digest(target_path));
        if (!prev_path.empty())
            manifest.inputs.emplace_back(prev_path, tw::file_digest(prev_path));
        manifest.outputs.emplace_back(out_path, tw::file_digest(out_path));
        tw::write_manifest(out_path, manifest);
        return tw::exit_code::ok;
    }

    if (cmd_wave->parsed()) {
        const tw::TrapConfig config = tw::load_trap_config(config_path);
        const tw::PotentialMatrix a = tw::read_matrix_cache(matrix_path);
        check_matrix_matches_config(a, config);
        const tw::TrapModel model = tw::build_trap(config);
        const tw::Species species = tw::Species::from_amu_e(mass_amu, charge_e);
        tw::FrequencyProfile profile;
        profile.mean_omega = 2.0 * tw::constants::pi * freq_mhz * 1e6;
        profile.modulation_amplitude = mod_amp;
        profile.modulation_period = mod_period;
        profile.phase_origin = from_z;
        tw::CompileOptions options;
        options.window_width = window;
        options.frame_spacing = frame_spacing;
        options.frame_period = frame_period;
        const tw::Waveform wave =
            tw::compile_waveform(model, a, from_z, to_z, profile, species, options);
        tw::write_waveform_csv(out_path, wave);
        manifest.config_hash = a.config_hash;
        manifest.inputs.emplace_back(config_path, tw::file_digest(config_path));
        manifest.inputs.emplace_back(matrix_path, tw::file_digest(matrix_path));
        manifest.outputs.emplace_back(out_path, tw::file_digest(out_path));
        tw::write_manifest(out_path, manifest);
        std::printf("compiled %zu frames, wrote %s\n", wave.size(), out_path.c_str());
        return tw::exit_code::ok;
    }

    if (cmd_probe->parsed()) {
        const tw::PotentialMatrix a = tw::read_matrix_cache(matrix_path);
        const tw::Waveform wave = tw::read_waveform_csv(wave_path);
        if (wave.config_hash != a.config_hash && !allow_mismatch)
            throw tw::ConfigError(
                "waveform was compiled against a different matrix (hash " +
                tw::hex64(wave.config_hash) + " vs " + tw::hex64(a.config_hash) +
                "); pass --allow-matrix-mismatch to probe anyway");
        tw::ProbeOptions options;
        options.fit_window = fit_window;
        options.spectroscopic_uncertainty = uncertainty;
        if (method == "curvature")
            options.method = tw::ProbeMethod::curvature;
        else if (method == "dynamics")
            options.method = tw::ProbeMethod::dynamics;
        else if (method == "both")
            options.method = tw::ProbeMethod::both;
        else
            throw tw::ArgumentError("--method must be curvature, dynamics, or both");
        const tw::ProbeReport report =
            tw::probe_scan(wave, a, wave.species, options);
        tw::write_report_csv(out_path, report, a.config_hash, method);
        if (!plot_path.empty()) {
            tw::svg::Series target, curvature, resid_c;
            target.label = "target";
            target.color = "#333333";
            curvature.label = "curvature probe";
            curvature.color = "#d62728";
            curvature.points = true;
            resid_c.label = "|dev| curvature";
            resid_c.color = "#d62728";
            resid_c.points = true;
            for (const auto& row : report.rows) {
                const double z_um = row.z * 1e6;
                target.x.push_back(z_um);
                target.y.push_back(row.omega_target / (2.0 * tw::constants::pi) / 1e6);
                curvature.x.push_back(z_um);
                curvature.y.push_back(row.omega_curvature / (2.0 * tw::constants::pi) /
                                      1e6);
                resid_c.x.push_back(z_um);
                resid_c.y.push_back(row.dev_curvature);
            }
            std::vector<tw::svg::Series> top{target, curvature};
            if (options.method != tw::ProbeMethod::curvature) {
                tw::svg::Series dynamics;
                dynamics.label = "dynamics probe";
                dynamics.color = "#1f77b4";
                dynamics.points = true;
                for (const auto& row : report.rows) {
                    dynamics.x.push_back(row.z * 1e6);
                    dynamics.y.push_back(row.omega_dynamics /
                                         (2.0 * tw::constants::pi) / 1e6);
                }
                top.push_back(dynamics);
            }
            const std::string svg = tw::svg::two_panel_plot(
                top, {resid_c}, "trap frequency along the axis", "z (um)",
                "f (MHz)", "relative deviation");
            tw::atomic_write(plot_path, svg);
        }
        manifest.config_hash = a.config_hash;
        manifest.inputs.emplace_back(matrix_path, tw::file_digest(matrix_path));
        manifest.inputs.emplace_back(wave_path, tw::file_digest(wave_path));
        manifest.outputs.emplace_back(out_path, tw::file_digest(out_path));
        if (!plot_path.empty())
            manifest.outputs.emplace_back(plot_path, tw::file_digest(plot_path));
        tw::write_manifest(out_path, manifest);
        std::printf("probed %zu frames: mean dev (curvature) = %.3g, failed = %d\n",
                    report.rows.size(), report.summary.mean_dev_curvature,
                    report.summary.failed_rows);
        return tw::exit_code::ok;
    }

    if (cmd_export->parsed()) {
        const tw::Waveform wave = tw::read_waveform_csv(wave_path);
        tw::write_dac_csv(out_path, wave);
        manifest.config_hash = wave.config_hash;
        manifest.inputs.emplace_back(wave_path, tw::file_digest(wave_path));
        manifest.outputs.emplace_back(out_path, tw::file_digest(out_path));
        tw::write_manifest(out_path, manifest);
        std::printf("wrote %s\n", out_path.c_str());
        return tw::exit_code::ok;
    }

    return tw::exit_code::config;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const tw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return tw::exit_code::config;
    } catch (const tw::ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return tw::exit_code::config;
    } catch (const tw::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return tw::exit_code::infeasible;
    } catch (const tw::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return tw::exit_code::io;
    } catch (const tw::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return tw::exit_code::numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tw::exit_code::numerical;
    }
}
