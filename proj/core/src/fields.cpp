#include "trapwave/fields.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "trapwave/constants.hpp"
#include "trapwave/errors.hpp"

namespace trapwave {

namespace {

// Antiderivative G(a,b) with d2G/dadb = 1/sqrt(a^2+b^2+w^2). The a*log and
// b*log terms have removable 0 * (-inf) limits on edge-line extensions; the
// exact-zero guards return the limit value 0.
inline double corner_term(double a, double b, double w2, double w) {
    const double r = std::sqrt(a * a + b * b + w2);
    double term = 0.0;
    if (a != 0.0) {
        const double bpr = (b >= 0.0) ? std::log(b + r)
                                      : std::log(a * a + w2) - std::log(r - b);
        term += a * bpr;
    }
    if (b != 0.0) {
        const double apr = (a >= 0.0) ? std::log(a + r)
                                      : std::log(b * b + w2) - std::log(r - a);
        term += b * apr;
    }
    if (w != 0.0)
        term -= w * std::atan((a * b) / (w * r));
    return term;
}

}  // namespace

double rectangle_potential_integral(double u, double v, double w, double half_u,
                                    double half_v) {
    const double w2 = w * w;
    const double a1 = u - half_u;
    const double a2 = u + half_u;
    const double b1 = v - half_v;
    const double b2 = v + half_v;
    return corner_term(a2, b2, w2, w) - corner_term(a1, b2, w2, w) -
           corner_term(a2, b1, w2, w) + corner_term(a1, b1, w2, w);
}

double panel_potential_integral(const Panel& panel, const Eigen::Vector3d& point) {
    const Eigen::Vector3d rel = point - panel.center;
    const double u = rel.dot(panel.axis_u);
    const double v = rel.dot(panel.axis_v);
    const double w = rel.dot(panel.axis_u.cross(panel.axis_v));
    return rectangle_potential_integral(u, v, w, panel.half_u, panel.half_v);
}

namespace {

// Rows of `out` are filled independently; the per-row summation order is fixed,
// so the result is identical to a sequential pass.
void fill_kernel_rows(const std::vector<Panel>& panels,
                      const std::vector<Eigen::Vector3d>& points,
                      Eigen::MatrixXd& out) {
    const auto n_rows = static_cast<Eigen::Index>(points.size());
    const auto n_cols = static_cast<Eigen::Index>(panels.size());
    auto worker = [&](Eigen::Index row_begin, Eigen::Index row_end) {
        for (Eigen::Index j = row_begin; j < row_end; ++j) {
            for (Eigen::Index p = 0; p < n_cols; ++p) {
                out(j, p) = constants::coulomb *
                            panel_potential_integral(panels[static_cast<std::size_t>(p)],
                                                     points[static_cast<std::size_t>(j)]);
            }
        }
    };
    unsigned n_threads = std::thread::hardware_concurrency();
    if (n_threads < 2 || n_rows < 64) {
        worker(0, n_rows);
        return;
    }
    n_threads = std::min<unsigned>(n_threads, 16);
    std::vector<std::thread> pool;
    const Eigen::Index chunk = (n_rows + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const Eigen::Index lo = static_cast<Eigen::Index>(t) * chunk;
        const Eigen::Index hi = std::min(n_rows, lo + chunk);
        if (lo >= hi)
            break;
        pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool)
        th.join();
}

}  // namespace

BemSystem::BemSystem(const TrapModel& model)
    : model_(std::make_shared<TrapModel>(model)) {
    const auto& panels = model_->panels;
    const auto p = static_cast<Eigen::Index>(panels.size());
    if (p == 0)
        throw NumericalError("BEM: model has no panels");

    std::vector<Eigen::Vector3d> centers(panels.size());
    for (std::size_t i = 0; i < panels.size(); ++i)
        centers[i] = panels[i].center;

    kernel_.resize(p, p);
    fill_kernel_rows(panels, centers, kernel_);
    lu_.compute(kernel_);
    // Coincident panels make the collocation matrix singular; a vanishing
    // pivot is the cheap detector.
    const double max_diag = kernel_.diagonal().cwiseAbs().maxCoeff();
    const double min_pivot = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > 1e-14 * max_diag))
        throw NumericalError("BEM: singular collocation system (coincident panels?)");
}

ChargeBasis BemSystem::solve(int electrode_index) const {
    const int n = model_->electrode_count();
    if (electrode_index < 1 || electrode_index > n)
        throw ArgumentError("BEM: electrode index " + std::to_string(electrode_index) +
                            " out of range 1.." + std::to_string(n));
    const auto& e = model_->electrodes[static_cast<std::size_t>(electrode_index - 1)];
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model_->panel_count()));
    for (std::size_t p = e.panel_begin; p < e.panel_end; ++p)
        bc[static_cast<Eigen::Index>(p)] = 1.0;

    ChargeBasis basis;
    basis.electrode_index = electrode_index;
    basis.panel_charge = lu_.solve(bc);
    if (!basis.panel_charge.allFinite())
        throw NumericalError("BEM: charge solve produced non-finite values");
    return basis;
}

double BemSystem::collocation_residual(const ChargeBasis& basis) const {
    const auto& e =
        model_->electrodes[static_cast<std::size_t>(basis.electrode_index - 1)];
    Eigen::VectorXd phi = kernel_ * basis.panel_charge;
    double worst = 0.0;
    for (Eigen::Index p = 0; p < phi.size(); ++p) {
        const auto up = static_cast<std::size_t>(p);
        const double bc = (up >= e.panel_begin && up < e.panel_end) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(phi[p] - bc));
    }
    return worst;
}

ChargeBasis solve_electrode_charges(const TrapModel& model, int electrode_index) {
    return BemSystem(model).solve(electrode_index);
}

double evaluate_potential(const TrapModel& model, const ChargeBasis& basis,
                          const Eigen::Vector3d& point) {
    const auto p = static_cast<Eigen::Index>(model.panel_count());
    if (basis.panel_charge.size() != p)
        throw ArgumentError("evaluate_potential: basis does not match model");

    constexpr double surface_tol = 1e-12;
    double phi = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        const Panel& panel = model.panels[static_cast<std::size_t>(i)];
        const Eigen::Vector3d rel = point - panel.center;
        const double u = rel.dot(panel.axis_u);
        const double v = rel.dot(panel.axis_v);
        const double w = rel.dot(panel.axis_u.cross(panel.axis_v));
        if (std::abs(w) < surface_tol && std::abs(u) < panel.half_u + surface_tol &&
            std::abs(v) < panel.half_v + surface_tol) {
            throw SingularityError("evaluate_potential: point on a panel surface");
        }
        phi += constants::coulomb * basis.panel_charge[i] *
               rectangle_potential_integral(u, v, w, panel.half_u, panel.half_v);
    }
    return phi;
}

PotentialMatrix assemble_matrix(const TrapModel& model, const Grid& grid) {
    if (grid.count < 2)
        throw ArgumentError("assemble_matrix: grid must have at least 2 points");

    const int n = model.electrode_count();
    const auto p = static_cast<Eigen::Index>(model.panel_count());

    BemSystem system(model);
    Eigen::MatrixXd charges(p, n);
    for (int i = 1; i <= n; ++i) {
        try {
            charges.col(i - 1) = system.solve(i).panel_charge;
        } catch (const NumericalError& err) {
            throw NumericalError("assemble_matrix: electrode " + std::to_string(i) +
                                 ": " + err.what());
        }
    }

    std::vector<Eigen::Vector3d> points(static_cast<std::size_t>(grid.count));
    for (Eigen::Index j = 0; j < grid.count; ++j)
        points[static_cast<std::size_t>(j)] = Eigen::Vector3d(0.0, 0.0, grid.z(j));

    Eigen::MatrixXd kernel(grid.count, p);
    fill_kernel_rows(model.panels, points, kernel);

    PotentialMatrix a;
    a.entries.noalias() = kernel * charges;
    a.grid = grid;
    a.config_hash = model.config.content_hash();
    if (!a.entries.allFinite())
        throw NumericalError("assemble_matrix: non-finite entries");
    return a;
}

AxialPotential superpose(const PotentialMatrix& a, const VoltageSet& v) {
    if (v.size() != a.entries.cols())
        throw ArgumentError("superpose: voltage vector length " +
                            std::to_string(v.size()) + " != electrode count " +
                            std::to_string(a.entries.cols()));
    AxialPotential phi;
    phi.values.noalias() = a.entries * v;
    phi.grid = a.grid;
    return phi;
}

}  // namespace trapwave
