#ifndef TRAPWAVE_SOLVER_HPP
#define TRAPWAVE_SOLVER_HPP

#include <Eigen/Core>
#include <vector>

#include "trapwave/fields.hpp"

namespace trapwave {

// Full factorization A = U S W^T with A of size M x N: U is M x M, W is N x N,
// s holds the min(M,N) singular values in non-increasing order.
struct SvdFactors {
    Eigen::MatrixXd u;
    Eigen::VectorXd s;
    Eigen::MatrixXd w;

    Eigen::Index rows() const { return u.rows(); }
    Eigen::Index cols() const { return w.rows(); }
    double s_max() const { return s.size() ? s[0] : 0.0; }
};

SvdFactors decompose(const Eigen::MatrixXd& a);

// Contiguous block of grid rows entering the least-squares system; rows
// outside the window are deleted, not zero-weighted.
struct RowWindow {
    Eigen::Index first = 0;
    Eigen::Index count = 0;
};

struct TargetPotential {
    Eigen::VectorXd values;  // size == window.count, volts on the window rows
    RowWindow window;
};

struct SolveResult {
    VoltageSet voltages;
    // Singular directions dropped by the alpha = 0 pseudo-inverse convention.
    std::vector<Eigen::Index> dropped;
};

// v_alpha = W S_alpha^-1 U^T phi with (S_alpha^-1)_k = s_k / (s_k^2 + alpha^2).
SolveResult tikhonov_apply(const SvdFactors& f, const TargetPotential& phi,
                           double alpha);

// v'_alpha = v_alpha + W D_alpha W^T v_prev, d_k = alpha^2 / (s_k^2 + alpha^2)
// and d_k = 1 past the singular values. Minimizes
// ||A v - phi||^2 + alpha^2 ||v - v_prev||^2 over the window rows.
SolveResult continuity_apply(const SvdFactors& f, const TargetPotential& phi,
                             double alpha, const VoltageSet& v_prev);

// ||A v - phi|| over the window, evaluated through the factors.
double window_residual(const SvdFactors& f, const TargetPotential& phi,
                       const VoltageSet& v);

struct AlphaSelection {
    double alpha = 0.0;
    VoltageSet voltages;
    int steps = 0;  // ladder steps taken past alpha0
    double residual_norm = 0.0;
    double max_abs_voltage = 0.0;
};

struct AlphaSearchOptions {
    // Bisect between the last infeasible and the first feasible ladder rung to
    // tighten alpha. Off by default: the plain ladder is the reproducible
    // reference behavior.
    bool bisection_refine = false;
    int bisection_steps = 20;
};

// Ladder search: alpha0 = 1e-6 * s_max, doubling until max |v_i| <= v_max
// (at most 200 steps); returns the first feasible set. Throws InfeasibleError
// carrying the best-found numbers.
AlphaSelection select_alpha(const SvdFactors& f, const TargetPotential& phi,
                            const VoltageSet& v_prev, double v_max,
                            const AlphaSearchOptions& options = {});

namespace solver_detail {
inline constexpr double alpha_ladder_start = 1e-6;  // x s_max
inline constexpr double alpha_ladder_factor = 2.0;
inline constexpr int alpha_ladder_max_steps = 200;
inline constexpr double pseudo_inverse_drop = 1e-15;  // x s_max
}  // namespace solver_detail

}  // namespace trapwave

#endif
