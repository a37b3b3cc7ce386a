#include "trapwave/probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>

#include "trapwave/constants.hpp"
#include "trapwave/errors.hpp"

namespace trapwave {

CubicSpline::CubicSpline(double start, double step, Eigen::VectorXd values)
    : start_(start), step_(step), values_(std::move(values)) {
    const Eigen::Index n = values_.size();
    if (n < 4)
        throw ArgumentError("spline: need at least 4 points");
    if (!(step_ > 0))
        throw ArgumentError("spline: step must be > 0");

    // Moments M_i = s''(z_i). Uniform spacing and not-a-knot ends make the
    // first and last interior moments explicit: M_1 = r_1 / 6, with
    // r_i = 6 (y_{i-1} - 2 y_i + y_{i+1}) / h^2, then M_0 = 2 M_1 - M_2.
    second_.resize(n);
    const double h2 = step_ * step_;
    auto r = [&](Eigen::Index i) {
        return 6.0 * (values_[i - 1] - 2.0 * values_[i] + values_[i + 1]) / h2;
    };
    second_[1] = r(1) / 6.0;
    second_[n - 2] = r(n - 2) / 6.0;
    if (n > 4) {
        // Thomas solve of M_{i-1} + 4 M_i + M_{i+1} = r_i for i = 2..n-3.
        const Eigen::Index m = n - 4;  // unknowns M_2..M_{n-3}
        Eigen::VectorXd diag = Eigen::VectorXd::Constant(m, 4.0);
        Eigen::VectorXd rhs(m);
        for (Eigen::Index k = 0; k < m; ++k)
            rhs[k] = r(k + 2);
        rhs[0] -= second_[1];
        rhs[m - 1] -= second_[n - 2];
        for (Eigen::Index k = 1; k < m; ++k) {
            const double w = 1.0 / diag[k - 1];
            diag[k] -= w;
            rhs[k] -= w * rhs[k - 1];
        }
        second_[m + 1] = rhs[m - 1] / diag[m - 1];
        for (Eigen::Index k = m - 2; k >= 0; --k)
            second_[k + 2] = (rhs[k] - second_[k + 3]) / diag[k];
    }
    second_[0] = 2.0 * second_[1] - second_[2];
    second_[n - 1] = 2.0 * second_[n - 2] - second_[n - 3];
}

double CubicSpline::value(double z) const {
    const Eigen::Index n = values_.size();
    double t = (z - start_) / step_;
    Eigen::Index i = static_cast<Eigen::Index>(std::floor(t));
    i = std::clamp<Eigen::Index>(i, 0, n - 2);
    t -= static_cast<double>(i);
    const double a = 1.0 - t;
    const double h2 = step_ * step_;
    return a * values_[i] + t * values_[i + 1] +
           (h2 / 6.0) * ((a * a * a - a) * second_[i] + (t * t * t - t) * second_[i + 1]);
}

double CubicSpline::derivative(double z) const {
    const Eigen::Index n = values_.size();
    double t = (z - start_) / step_;
    Eigen::Index i = static_cast<Eigen::Index>(std::floor(t));
    i = std::clamp<Eigen::Index>(i, 0, n - 2);
    t -= static_cast<double>(i);
    const double a = 1.0 - t;
    return (values_[i + 1] - values_[i]) / step_ +
           (step_ / 6.0) *
               ((1.0 - 3.0 * a * a) * second_[i] + (3.0 * t * t - 1.0) * second_[i + 1]);
}

double find_minimum(const AxialPotential& phi) {
    const Eigen::Index n = phi.values.size();
    if (n < 3)
        throw ArgumentError("find_minimum: need at least 3 samples");
    Eigen::Index m = 0;
    for (Eigen::Index j = 1; j < n; ++j) {
        if (phi.values[j] < phi.values[m])
            m = j;  // strict: ties keep the smaller z
    }
    if (m == 0 || m == n - 1)
        throw BoundaryError("find_minimum: minimum on the grid boundary");
    const double y0 = phi.values[m - 1];
    const double y1 = phi.values[m];
    const double y2 = phi.values[m + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (denom <= 0.0)
        return phi.grid.z(m);
    return phi.grid.z(m) + 0.5 * phi.grid.step * (y0 - y2) / denom;
}

double curvature_frequency(const AxialPotential& phi, double center,
                           const Species& species, int fit_window) {
    if (fit_window < 5 || fit_window % 2 == 0)
        throw ArgumentError("curvature_frequency: fit_window must be odd and >= 5");
    const Eigen::Index n = phi.values.size();
    const Eigen::Index half = fit_window / 2;
    const Eigen::Index jc = phi.grid.nearest_index(center);
    if (jc - half < 0 || jc + half >= n)
        throw ArgumentError("curvature_frequency: fit window outside the grid");

    // Quadratic LSQ in the scaled offset t = (z - center)/span for conditioning.
    const double span = static_cast<double>(half) * phi.grid.step;
    Eigen::MatrixXd design(fit_window, 3);
    Eigen::VectorXd rhs(fit_window);
    for (int r = 0; r < fit_window; ++r) {
        const Eigen::Index j = jc - half + r;
        const double t = (phi.grid.z(j) - center) / span;
        design(r, 0) = 1.0;
        design(r, 1) = t;
        design(r, 2) = t * t;
        rhs[r] = phi.values[j];
    }
    const Eigen::Vector3d coef =
        (design.transpose() * design).ldlt().solve(design.transpose() * rhs);
    const double c2 = coef[2] / (span * span);
    if (!(c2 > 0.0))
        throw NonConfiningError("curvature_frequency: non-confining curvature");
    return std::sqrt(species.charge * 2.0 * c2 / species.mass);
}

namespace {

// Root of the cubic Hermite interpolant of (z - z_ref) on one step, used to
// refine crossing times. tau in [0, 1].
double hermite_crossing(double z0, double v0, double z1, double v1, double dt,
                        double z_ref) {
    const double p0 = z0 - z_ref;
    const double p1 = z1 - z_ref;
    const double m0 = v0 * dt;
    const double m1 = v1 * dt;
    double tau = p0 / (p0 - p1);  // secant start
    for (int it = 0; it < 4; ++it) {
        const double t2 = tau * tau;
        const double t3 = t2 * tau;
        const double hval = (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + tau) * m0 +
                            (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
        const double hder = (6 * t2 - 6 * tau) * p0 + (3 * t2 - 4 * tau + 1) * m0 +
                            (-6 * t2 + 6 * tau) * p1 + (3 * t2 - 2 * tau) * m1;
        if (hder == 0.0)
            break;
        tau -= hval / hder;
    }
    return std::clamp(tau, 0.0, 1.0);
}

}  // namespace

OscillationTrace simulate_oscillation(const AxialPotential& phi,
                                      const Species& species, double amplitude,
                                      double duration, double dt_override) {
    const double z_min = find_minimum(phi);
    const double omega_est = curvature_frequency(
        phi, z_min, species,
        std::min<int>(7, static_cast<int>(phi.values.size()) | 1));
    if (!(duration >= 20.0 * 2.0 * constants::pi / omega_est))
        throw ArgumentError("simulate_oscillation: duration below 20 periods");

    CubicSpline spline(phi.grid.start, phi.grid.step, phi.values);
    const double z_lo = phi.grid.start;
    const double z_hi = phi.grid.back();
    double z = z_min + amplitude;
    if (z < z_lo || z > z_hi)
        throw ArgumentError("simulate_oscillation: launch point outside the grid");

    const double dt =
        (dt_override > 0.0) ? dt_override : 1.0 / (200.0 * omega_est);
    const double acc_scale = -species.charge / species.mass;
    const auto steps = static_cast<long long>(std::ceil(duration / dt));
    const double period_est = 2.0 * constants::pi / omega_est;
    const auto steps_per_period = static_cast<long long>(std::llround(period_est / dt));

    OscillationTrace trace;
    trace.dt = dt;

    double v = 0.0;
    double a = acc_scale * spline.derivative(z);
    double first_cross = 0.0, last_cross = 0.0;
    int crossings = 0;
    double energy_acc = 0.0;
    long long energy_count = 0;
    double energy_first = 0.0;
    bool have_first_energy = false;

    for (long long n = 0; n < steps; ++n) {
        const double z_old = z;
        const double v_old = v;
        z += v * dt + 0.5 * a * dt * dt;
        if (z < z_lo || z > z_hi)
            throw EscapeError("simulate_oscillation: ion left the grid");
        const double a_new = acc_scale * spline.derivative(z);
        v += 0.5 * (a + a_new) * dt;
        a = a_new;

        // period-averaged total energy, for the secular-drift metric
        energy_acc += 0.5 * species.mass * v * v + species.charge * spline.value(z);
        if (++energy_count == steps_per_period) {
            if (!have_first_energy) {
                energy_first = energy_acc / static_cast<double>(energy_count);
                have_first_energy = true;
            }
            trace.energy_last = energy_acc / static_cast<double>(energy_count);
            energy_acc = 0.0;
            energy_count = 0;
        }

        if (z_old < z_min && z >= z_min && v_old > 0.0) {
            const double tau = hermite_crossing(z_old, v_old, z, v, dt, z_min);
            const double t_cross = (static_cast<double>(n) + tau) * dt;
            if (crossings == 0)
                first_cross = t_cross;
            last_cross = t_cross;
            ++crossings;
        }
    }
    trace.energy_first = energy_first;
    if (crossings < 2)
        throw NumericalError("simulate_oscillation: fewer than 2 crossings observed");
    trace.crossings = crossings;
    const double period = (last_cross - first_cross) / static_cast<double>(crossings - 1);
    trace.omega_raw = 2.0 * constants::pi / period;
    // velocity-Verlet dispersion correction, exact for a harmonic well
    trace.omega = (2.0 / dt) * std::sin(trace.omega_raw * dt / 2.0);
    return trace;
}

double oscillation_frequency(const AxialPotential& phi, const Species& species,
                             double amplitude, double duration) {
    return simulate_oscillation(phi, species, amplitude, duration).omega;
}

namespace {

AxialPotential window_slice(const AxialPotential& phi, const RowWindow& win) {
    AxialPotential out;
    out.values = phi.values.segment(win.first, win.count);
    out.grid = Grid{phi.grid.z(win.first), phi.grid.step, win.count};
    return out;
}

}  // namespace

ProbeReport probe_scan(const Waveform& waveform, const PotentialMatrix& a,
                       const Species& species, const ProbeOptions& options) {
    ProbeReport report;
    report.rows.reserve(waveform.frames.size());

    double sum_c = 0.0, max_c = 0.0;
    double sum_d = 0.0, max_d = 0.0;
    int n_c = 0, n_d = 0;

    for (const auto& frame : waveform.frames) {
        ProbeRow row;
        row.z = frame.z_target;
        row.omega_target = frame.omega_target;
        try {
            const AxialPotential full = superpose(a, frame.voltages);
            const RowWindow win =
                window_rows(a.grid, frame.z_target, waveform.window_width);
            if (win.first < 0 || win.first + win.count > a.grid.count)
                throw ArgumentError("probe window outside the grid");
            const AxialPotential local = window_slice(full, win);

            if (options.method == ProbeMethod::curvature ||
                options.method == ProbeMethod::both) {
                row.omega_curvature = curvature_frequency(
                    local, frame.z_target, species, options.fit_window);
                row.dev_curvature =
                    std::abs(row.omega_curvature - row.omega_target) / row.omega_target;
                row.sigma_rel = options.spectroscopic_uncertainty;
                sum_c += row.dev_curvature;
                max_c = std::max(max_c, row.dev_curvature);
                ++n_c;
            }
            if (options.method == ProbeMethod::dynamics ||
                options.method == ProbeMethod::both) {
                const double duration =
                    options.dynamics_periods * 2.0 * constants::pi / frame.omega_target;
                row.omega_dynamics = oscillation_frequency(
                    local, species, options.dynamics_amplitude, duration);
                row.dev_dynamics =
                    std::abs(row.omega_dynamics - row.omega_target) / row.omega_target;
                row.sigma_rel = options.spectroscopic_uncertainty;
                sum_d += row.dev_dynamics;
                max_d = std::max(max_d, row.dev_dynamics);
                ++n_d;
            }
        } catch (const Error& err) {
            row.ok = false;
            row.error = "z = " + std::to_string(frame.z_target) + ": " + err.what();
            ++report.summary.failed_rows;
        }
        report.rows.push_back(std::move(row));
    }
    report.summary.mean_dev_curvature = n_c ? sum_c / n_c : 0.0;
    report.summary.max_dev_curvature = max_c;
    report.summary.mean_dev_dynamics = n_d ? sum_d / n_d : 0.0;
    report.summary.max_dev_dynamics = max_d;
    return report;
}

double transport_energy_gain(const Waveform& waveform, const PotentialMatrix& a,
                             const Species& species, double frame_period) {
    if (!(frame_period > 0))
        throw ArgumentError("transport_energy_gain: frame_period must be > 0");
    if (waveform.frames.empty())
        throw ArgumentError("transport_energy_gain: empty waveform");

    const auto n_frames = waveform.frames.size();
    std::vector<CubicSpline> splines;
    splines.reserve(n_frames);
    double omega_max = 0.0;
    for (const auto& frame : waveform.frames) {
        const AxialPotential full = superpose(a, frame.voltages);
        splines.emplace_back(a.grid.start, a.grid.step, full.values);
        omega_max = std::max(omega_max, frame.omega_target);
    }

    auto frame_minimum = [&](std::size_t k) {
        const AxialPotential full = superpose(a, waveform.frames[k].voltages);
        const RowWindow win =
            window_rows(a.grid, waveform.frames[k].z_target, waveform.window_width);
        return find_minimum(window_slice(full, win));
    };

    const double z_lo = a.grid.start;
    const double z_hi = a.grid.back();
    double z = frame_minimum(0);
    double v = 0.0;
    const double e_initial =
        species.charge * (splines[0].value(z) - splines[0].value(frame_minimum(0)));

    if (n_frames == 1)
        return 0.0;

    const double t_total = frame_period * static_cast<double>(n_frames - 1);
    const double dt = 1.0 / (200.0 * omega_max);
    const auto steps = static_cast<long long>(std::ceil(t_total / dt));
    const double acc_scale = -species.charge / species.mass;

    auto accel = [&](double pos, double t) {
        double f = t / frame_period;
        auto k = static_cast<std::size_t>(std::floor(f));
        if (k >= n_frames - 1) {
            return acc_scale * splines[n_frames - 1].derivative(pos);
        }
        const double u = f - static_cast<double>(k);
        return acc_scale * ((1.0 - u) * splines[k].derivative(pos) +
                            u * splines[k + 1].derivative(pos));
    };

    double t = 0.0;
    double acc = accel(z, t);
    for (long long n = 0; n < steps; ++n) {
        const double step_dt = std::min(dt, t_total - t);
        if (step_dt <= 0.0)
            break;
        z += v * step_dt + 0.5 * acc * step_dt * step_dt;
        if (z < z_lo || z > z_hi)
            throw EscapeError("transport_energy_gain: ion left the grid");
        const double a_new = accel(z, t + step_dt);
        v += 0.5 * (acc + a_new) * step_dt;
        acc = a_new;
        t += step_dt;
    }

    const double z_min_final = frame_minimum(n_frames - 1);
    const double e_final =
        0.5 * species.mass * v * v +
        species.charge * (splines[n_frames - 1].value(z) -
                          splines[n_frames - 1].value(z_min_final));
    return e_final - e_initial;
}

}  // namespace trapwave
