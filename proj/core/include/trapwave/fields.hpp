#ifndef TRAPWAVE_FIELDS_HPP
#define TRAPWAVE_FIELDS_HPP

#include <Eigen/Core>
#include <Eigen/LU>
#include <cstdint>
#include <memory>

#include "trapwave/geometry.hpp"

namespace trapwave {

using VoltageSet = Eigen::VectorXd;

// Integral of 1/|r - r'| over the rectangle |u'| <= half_u, |v'| <= half_v in
// the w = 0 plane, evaluated at local coordinates (u, v, w). Closed form;
// multiply by coulomb * sigma for the potential of a uniform charge density.
double rectangle_potential_integral(double u, double v, double w, double half_u,
                                    double half_v);

// Same integral in panel-local coordinates of an arbitrary rectangle.
double panel_potential_integral(const Panel& panel, const Eigen::Vector3d& point);

// Surface charge densities on every panel of the model when electrode
// `electrode_index` is held at 1 V and all others at 0 V (grounded electrodes
// carry induced charge).
struct ChargeBasis {
    int electrode_index = 0;  // 1-based
    Eigen::VectorXd panel_charge;  // C/m^2 per volt, one entry per model panel
};

// Collocation system (panel-center kernel matrix, factorized once) shared by
// all per-electrode solves of one trap.
class BemSystem {
  public:
    explicit BemSystem(const TrapModel& model);

    const TrapModel& model() const { return *model_; }
    ChargeBasis solve(int electrode_index) const;
    // max |K q - bc| over collocation points; backward-error check.
    double collocation_residual(const ChargeBasis& basis) const;

  private:
    std::shared_ptr<const TrapModel> model_;
    Eigen::MatrixXd kernel_;  // P x P collocation matrix
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

// One-shot convenience around BemSystem.
ChargeBasis solve_electrode_charges(const TrapModel& model, int electrode_index);

// Potential at a free-space point; throws SingularityError within 1e-12 m of a
// panel surface.
double evaluate_potential(const TrapModel& model, const ChargeBasis& basis,
                          const Eigen::Vector3d& point);

// A[j][i]: potential at grid point j per volt on electrode i. Dimensionless,
// bounded to [0, 1] by the maximum principle.
struct PotentialMatrix {
    Eigen::MatrixXd entries;  // M x N
    Grid grid;
    std::uint64_t config_hash = 0;
};

PotentialMatrix assemble_matrix(const TrapModel& model, const Grid& grid);

// Potential samples on (a slice of) the axial grid.
struct AxialPotential {
    Eigen::VectorXd values;
    Grid grid;
};

// phi_j = sum_i A[j][i] v_i
AxialPotential superpose(const PotentialMatrix& a, const VoltageSet& v);

}  // namespace trapwave

#endif
