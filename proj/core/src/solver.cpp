#include "trapwave/solver.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>

#include "trapwave/errors.hpp"

namespace trapwave {

SvdFactors decompose(const Eigen::MatrixXd& a) {
    if (!a.allFinite())
        throw ArgumentError("decompose: matrix has non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("decompose: SVD failed to converge");
    SvdFactors f;
    f.u = svd.matrixU();
    f.s = svd.singularValues();
    f.w = svd.matrixV();
    if (!f.s.allFinite() || (f.s.size() && f.s.minCoeff() < 0.0))
        throw NumericalError("decompose: invalid singular values");
    return f;
}

namespace {

void check_dimensions(const SvdFactors& f, const TargetPotential& phi) {
    if (phi.values.size() != phi.window.count)
        throw ArgumentError("target potential: values length does not match window");
    if (phi.values.size() == 0)
        throw ArgumentError("target potential: empty window");
    if (!phi.values.allFinite())
        throw ArgumentError("target potential: non-finite values");
    if (phi.values.size() != f.rows())
        throw ArgumentError("solver: factors are for " + std::to_string(f.rows()) +
                            " rows, target has " + std::to_string(phi.values.size()));
}

}  // namespace

SolveResult tikhonov_apply(const SvdFactors& f, const TargetPotential& phi,
                           double alpha) {
    if (!(alpha >= 0.0))
        throw ArgumentError("tikhonov_apply: alpha must be >= 0");
    check_dimensions(f, phi);

    const Eigen::Index k_count = f.s.size();
    const Eigen::VectorXd y = f.u.transpose() * phi.values;

    SolveResult result;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(f.cols());
    const double drop_below = solver_detail::pseudo_inverse_drop * f.s_max();
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const double s = f.s[k];
        if (alpha == 0.0) {
            if (s <= drop_below) {
                result.dropped.push_back(k);
                continue;
            }
            coef[k] = y[k] / s;
        } else {
            coef[k] = s / (s * s + alpha * alpha) * y[k];
        }
    }
    result.voltages.noalias() = f.w * coef;
    return result;
}

SolveResult continuity_apply(const SvdFactors& f, const TargetPotential& phi,
                             double alpha, const VoltageSet& v_prev) {
    if (!(alpha > 0.0))
        throw ArgumentError("continuity_apply: alpha must be > 0");
    check_dimensions(f, phi);
    if (v_prev.size() != f.cols())
        throw ArgumentError("continuity_apply: v_prev length " +
                            std::to_string(v_prev.size()) + " != electrode count " +
                            std::to_string(f.cols()));

    const Eigen::Index k_count = f.s.size();
    const Eigen::VectorXd y = f.u.transpose() * phi.values;
    const Eigen::VectorXd c = f.w.transpose() * v_prev;

    Eigen::VectorXd coef(f.cols());
    for (Eigen::Index k = 0; k < f.cols(); ++k) {
        if (k < k_count) {
            const double s = f.s[k];
            const double denom = s * s + alpha * alpha;
            coef[k] = s / denom * y[k] + alpha * alpha / denom * c[k];
        } else {
            coef[k] = c[k];  // d_k = 1 past the singular values
        }
    }
    SolveResult result;
    result.voltages.noalias() = f.w * coef;
    return result;
}

double window_residual(const SvdFactors& f, const TargetPotential& phi,
                       const VoltageSet& v) {
    // ||A v - phi|| = ||S W^T v - U^T phi|| by orthogonality of U.
    const Eigen::VectorXd y = f.u.transpose() * phi.values;
    const Eigen::VectorXd c = f.w.transpose() * v;
    double sq = 0.0;
    const Eigen::Index k_count = f.s.size();
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        const double model = (k < k_count) ? f.s[k] * c[k] : 0.0;
        const double r = model - y[k];
        sq += r * r;
    }
    return std::sqrt(sq);
}

AlphaSelection select_alpha(const SvdFactors& f, const TargetPotential& phi,
                            const VoltageSet& v_prev, double v_max,
                            const AlphaSearchOptions& options) {
    if (!(v_max > 0.0))
        throw ArgumentError("select_alpha: v_max must be > 0");
    check_dimensions(f, phi);
    if (v_prev.size() != f.cols())
        throw ArgumentError("select_alpha: v_prev length mismatch");
    if (v_prev.size() && v_prev.cwiseAbs().maxCoeff() > v_max)
        throw ArgumentError("select_alpha: v_prev violates the voltage bound");

    const double s_max = f.s_max();
    double alpha = (s_max > 0.0) ? solver_detail::alpha_ladder_start * s_max
                                 : solver_detail::alpha_ladder_start;
    double best_max_v = std::numeric_limits<double>::infinity();
    double best_residual = std::numeric_limits<double>::infinity();
    for (int step = 0; step < solver_detail::alpha_ladder_max_steps; ++step) {
        SolveResult candidate = continuity_apply(f, phi, alpha, v_prev);
        const double max_v = candidate.voltages.size()
                                 ? candidate.voltages.cwiseAbs().maxCoeff()
                                 : 0.0;
        if (max_v <= v_max) {
            AlphaSelection sel;
            sel.alpha = alpha;
            sel.voltages = std::move(candidate.voltages);
            sel.steps = step;
            sel.max_abs_voltage = max_v;
            if (options.bisection_refine && step > 0) {
                // the previous rung was infeasible: tighten alpha between them
                double lo = alpha / solver_detail::alpha_ladder_factor;
                double hi = alpha;
                for (int it = 0; it < options.bisection_steps; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    SolveResult trial = continuity_apply(f, phi, mid, v_prev);
                    const double trial_max = trial.voltages.cwiseAbs().maxCoeff();
                    if (trial_max <= v_max) {
                        hi = mid;
                        sel.alpha = mid;
                        sel.voltages = std::move(trial.voltages);
                        sel.max_abs_voltage = trial_max;
                    } else {
                        lo = mid;
                    }
                }
            }
            sel.residual_norm = window_residual(f, phi, sel.voltages);
            return sel;
        }
        if (max_v < best_max_v) {
            best_max_v = max_v;
            best_residual = window_residual(f, phi, candidate.voltages);
        }
        alpha *= solver_detail::alpha_ladder_factor;
    }
    throw InfeasibleError(
        "select_alpha: no feasible alpha within " +
            std::to_string(solver_detail::alpha_ladder_max_steps) +
            " ladder steps (best max|v| = " + std::to_string(best_max_v) + " V)",
        best_max_v, best_residual);
}

}  // namespace trapwave
