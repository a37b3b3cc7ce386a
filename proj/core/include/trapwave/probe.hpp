#ifndef TRAPWAVE_PROBE_HPP
#define TRAPWAVE_PROBE_HPP

#include <cmath>
#include <string>
#include <vector>

#include "trapwave/fields.hpp"
#include "trapwave/waveform.hpp"

namespace trapwave {

// Not-a-knot cubic spline on a uniform grid. Reproduces quadratics and cubics
// exactly, which the harmonic-well recovery checks rely on.
class CubicSpline {
  public:
    CubicSpline() = default;
    CubicSpline(double start, double step, Eigen::VectorXd values);

    double value(double z) const;
    double derivative(double z) const;
    double start() const { return start_; }
    double end() const { return start_ + step_ * static_cast<double>(values_.size() - 1); }

  private:
    double start_ = 0.0;
    double step_ = 0.0;
    Eigen::VectorXd values_;
    Eigen::VectorXd second_;  // second derivatives at the knots
};

// Vertex of the parabola through the discrete global minimum and its two
// neighbors. Ties go to smaller z; a minimum on the boundary throws
// BoundaryError.
double find_minimum(const AxialPotential& phi);

// omega = sqrt(q * 2 c2 / m) from a least-squares quadratic fit of fit_window
// points centered nearest `center`. fit_window must be odd and >= 5.
double curvature_frequency(const AxialPotential& phi, double center,
                           const Species& species, int fit_window);

struct OscillationTrace {
    double omega = 0.0;      // dispersion-corrected estimate
    double omega_raw = 0.0;  // straight from the mean crossing period
    double dt = 0.0;
    int crossings = 0;
    double energy_first = 0.0;  // mean total energy over the first full period
    double energy_last = 0.0;   // ... and over the last
    double secular_drift() const {
        return std::abs(energy_last - energy_first) / std::abs(energy_first);
    }
};

// Velocity-Verlet integration of m z'' = -q dphi/dz with spline-interpolated
// force, launched at rest from z_min + amplitude. Frequency from the mean
// period between successive upward crossings of z_min, crossing times refined
// by cubic Hermite interpolation. dt defaults to 1/(200 omega_est);
// dt_override replaces it (step-halving convergence checks).
OscillationTrace simulate_oscillation(const AxialPotential& phi,
                                      const Species& species, double amplitude,
                                      double duration, double dt_override = 0.0);

double oscillation_frequency(const AxialPotential& phi, const Species& species,
                             double amplitude, double duration);

enum class ProbeMethod { curvature, dynamics, both };

struct ProbeOptions {
    ProbeMethod method = ProbeMethod::both;
    int fit_window = 7;
    double dynamics_amplitude = 10e-6;
    double dynamics_periods = 25.0;
    double spectroscopic_uncertainty = 0.006;  // relative, reported per row
};

struct ProbeRow {
    double z = 0.0;
    double omega_target = 0.0;
    double omega_curvature = std::numeric_limits<double>::quiet_NaN();
    double omega_dynamics = std::numeric_limits<double>::quiet_NaN();
    double dev_curvature = std::numeric_limits<double>::quiet_NaN();
    double dev_dynamics = std::numeric_limits<double>::quiet_NaN();
    double sigma_rel = 0.0;
    bool ok = true;
    std::string error;
};

struct ProbeSummary {
    double mean_dev_curvature = 0.0;
    double max_dev_curvature = 0.0;
    double mean_dev_dynamics = 0.0;
    double max_dev_dynamics = 0.0;
    int failed_rows = 0;
};

struct ProbeReport {
    std::vector<ProbeRow> rows;
    ProbeSummary summary;
};

// Evaluate every frame's final configuration: realized potential, frequency at
// the frame's z_p, deviation against the intended omega. Failed frames are
// marked and the scan continues.
ProbeReport probe_scan(const Waveform& waveform, const PotentialMatrix& a,
                       const Species& species, const ProbeOptions& options = {});

// Integrate the ion through the time-dependent potential (voltages linearly
// interpolated between frames, frame_period apart); returns the motional
// energy gained, measured against the final well.
double transport_energy_gain(const Waveform& waveform, const PotentialMatrix& a,
                             const Species& species, double frame_period);

}  // namespace trapwave

#endif
