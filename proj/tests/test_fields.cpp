#include <doctest.h>

#include <cmath>
#include <random>

#include "trapwave/constants.hpp"
#include "trapwave/errors.hpp"
#include "trapwave/fields.hpp"

using namespace trapwave;

namespace {

// One isolated square plate of side `side`, a single panel, lying in the
// x = 0 plane.
TrapModel single_panel_model(double side) {
    TrapModel model;
    Electrode e;
    e.index = 1;
    e.wing = 0;
    e.panel_begin = 0;
    e.panel_end = 1;
    model.electrodes.push_back(e);
    Panel p;
    p.center = Eigen::Vector3d::Zero();
    p.axis_u = Eigen::Vector3d(0, 1, 0);
    p.axis_v = Eigen::Vector3d(0, 0, 1);
    p.half_u = side / 2.0;
    p.half_v = side / 2.0;
    model.panels.push_back(p);
    return model;
}

TrapConfig small_config() {
    TrapConfig config;
    config.segment_count_per_wing = 4;
    config.panels_axial = 2;
    config.panels_transverse = 2;
    config.electrode_height = 1e-3;
    return config;
}

// Gauss-Legendre 2D quadrature of 1/r over the rectangle; oracle for the
// closed-form kernel.
double quadrature_integral(double u, double v, double w, double half_u,
                           double half_v) {
    static const double nodes[8] = {-0.9602898564975363, -0.7966664774136267,
                                    -0.5255324099163290, -0.1834346424956498,
                                    0.1834346424956498,  0.5255324099163290,
                                    0.7966664774136267,  0.9602898564975363};
    static const double weights[8] = {0.1012285362903763, 0.2223810344533745,
                                      0.3137066458778873, 0.3626837833783620,
                                      0.3626837833783620, 0.3137066458778873,
                                      0.2223810344533745, 0.1012285362903763};
    double sum = 0.0;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            const double du = u - half_u * nodes[i];
            const double dv = v - half_v * nodes[j];
            sum += weights[i] * weights[j] /
                   std::sqrt(du * du + dv * dv + w * w);
        }
    }
    return sum * half_u * half_v;
}

}  // namespace

TEST_CASE("rectangle kernel matches quadrature off the surface") {
    // far enough from the panel that 8x8 quadrature is accurate
    const double hu = 30e-6, hv = 70e-6;
    for (const auto& [u, v, w] : {std::array<double, 3>{10e-6, -20e-6, 200e-6},
                                  std::array<double, 3>{150e-6, 90e-6, 120e-6},
                                  std::array<double, 3>{-300e-6, 40e-6, -350e-6}}) {
        const double exact = rectangle_potential_integral(u, v, w, hu, hv);
        const double quad = quadrature_integral(u, v, w, hu, hv);
        CHECK(exact == doctest::Approx(quad).epsilon(1e-6));
    }
}

TEST_CASE("rectangle kernel: analytic self-potential of a square") {
    // I(0,0,0) over a square of side L equals 4 L ln(1 + sqrt(2))
    const double side = 200e-6;
    const double val = rectangle_potential_integral(0, 0, 0, side / 2, side / 2);
    CHECK(val == doctest::Approx(4.0 * side * std::log(1.0 + std::sqrt(2.0)))
                     .epsilon(1e-12));
}

TEST_CASE("single-panel electrode: inverted self-potential gives 1 V") {
    const double side = 150e-6;
    const TrapModel model = single_panel_model(side);
    const ChargeBasis basis = solve_electrode_charges(model, 1);

    const double i_self = 4.0 * side * std::log(1.0 + std::sqrt(2.0));
    const double q_expected = 1.0 / (constants::coulomb * i_self);
    CHECK(basis.panel_charge[0] == doctest::Approx(q_expected).epsilon(1e-12));

    // re-evaluated potential just off the center reproduces the boundary
    // value; 1 nm off the surface the deficit is E * dz ~ 1e-5 V
    const double phi =
        evaluate_potential(model, basis, Eigen::Vector3d(1e-9, 0, 0));
    CHECK(phi == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("far field of a charged plate approaches the monopole") {
    const double side = 150e-6;
    const TrapModel model = single_panel_model(side);
    const ChargeBasis basis = solve_electrode_charges(model, 1);
    const double q_total = basis.panel_charge[0] * model.panels[0].area();
    const double r = 100.0 * side;
    for (const Eigen::Vector3d dir :
         {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
          Eigen::Vector3d(0.5, 0.5, std::sqrt(0.5))}) {
        const double phi = evaluate_potential(model, basis, r * dir.normalized());
        const double monopole = constants::coulomb * q_total / r;
        CHECK(phi == doctest::Approx(monopole).epsilon(0.01));
    }
}

TEST_CASE("zero charge density gives zero potential") {
    const TrapModel model = single_panel_model(100e-6);
    ChargeBasis basis;
    basis.electrode_index = 1;
    basis.panel_charge = Eigen::VectorXd::Zero(1);
    CHECK(evaluate_potential(model, basis, Eigen::Vector3d(1e-4, 2e-4, -3e-4)) == 0.0);
}

TEST_CASE("evaluating on a panel surface is a singularity error") {
    const TrapModel model = single_panel_model(100e-6);
    const ChargeBasis basis = solve_electrode_charges(model, 1);
    CHECK_THROWS_AS(evaluate_potential(model, basis, Eigen::Vector3d::Zero()),
                    SingularityError);
    CHECK_THROWS_AS(
        evaluate_potential(model, basis, Eigen::Vector3d(0.0, 20e-6, -30e-6)),
        SingularityError);
    // on the plane but outside the rectangle is fine
    CHECK_NOTHROW(evaluate_potential(model, basis, Eigen::Vector3d(0.0, 0.0, 90e-6)));
}

TEST_CASE("collocation residual below 1e-6 V on every electrode") {
    const TrapModel model = build_trap(small_config());
    const BemSystem system(model);
    for (int i = 1; i <= model.electrode_count(); ++i) {
        const ChargeBasis basis = system.solve(i);
        CHECK(system.collocation_residual(basis) <= 1e-6);
    }
}

TEST_CASE("free-space potential is harmonic (7-point Laplacian)") {
    const TrapModel model = build_trap(small_config());
    const BemSystem system(model);
    const ChargeBasis basis = system.solve(3);

    std::mt19937_64 rng(4242);
    const double span = 3.0 * model.config.pitch();
    std::uniform_real_distribution<double> ux(-150e-6, 150e-6);
    std::uniform_real_distribution<double> uy(-300e-6, 300e-6);
    std::uniform_real_distribution<double> uz(0.0, span);
    const double h = 1e-6;
    for (int k = 0; k < 100; ++k) {
        const Eigen::Vector3d p(ux(rng), uy(rng), uz(rng));
        auto phi = [&](const Eigen::Vector3d& q) {
            return evaluate_potential(model, basis, q);
        };
        const double center = phi(p);
        double lap = -6.0 * center;
        for (int axis = 0; axis < 3; ++axis) {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e[axis] = h;
            lap += phi(p + e) + phi(p - e);
        }
        lap /= h * h;
        CHECK(std::abs(lap) <= 1e-3 * std::abs(center) / (h * h));
    }
}

TEST_CASE("opposing-pair potential is mirror symmetric across the axis plane") {
    TrapConfig config = small_config();
    config.segment_count_per_wing = 1;
    const TrapModel model = build_trap(config);
    const BemSystem system(model);
    const ChargeBasis b1 = system.solve(1);
    const ChargeBasis b2 = system.solve(2);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-100e-6, 100e-6);
    for (int k = 0; k < 20; ++k) {
        const Eigen::Vector3d p(u(rng), u(rng), u(rng));
        const Eigen::Vector3d p_ref(-p.x(), p.y(), p.z());
        const double phi =
            evaluate_potential(model, b1, p) + evaluate_potential(model, b2, p);
        const double phi_ref =
            evaluate_potential(model, b1, p_ref) + evaluate_potential(model, b2, p_ref);
        CHECK(phi == doctest::Approx(phi_ref).epsilon(1e-12));
    }
}

TEST_CASE("assembled matrix obeys the maximum principle and decays") {
    const TrapConfig config = small_config();
    const TrapModel model = build_trap(config);
    // grid centered on the wing, clear of the plate planes
    const double z_mid = (config.segment_count_per_wing - 1) * config.pitch() / 2.0;
    const Grid grid = axial_grid(z_mid - 300e-6, z_mid + 300e-6, 5e-6);
    const PotentialMatrix a = assemble_matrix(model, grid);

    CHECK(a.entries.minCoeff() >= 0.0);
    CHECK(a.entries.maxCoeff() <= 1.0);

    // the electrode nearest the midpoint contributes more than the farthest one
    const Eigen::Index j_mid = grid.nearest_index(z_mid);
    int near_idx = -1, far_idx = -1;
    double near_d = 1e9, far_d = -1.0;
    for (const auto& e : model.electrodes) {
        const double dist = std::abs(e.center_z - z_mid);
        if (e.wing != 0)
            continue;
        if (dist < near_d) {
            near_d = dist;
            near_idx = e.index;
        }
        if (dist > far_d) {
            far_d = dist;
            far_idx = e.index;
        }
    }
    REQUIRE(near_idx > 0);
    REQUIRE(far_idx > 0);
    CHECK(a.entries(j_mid, near_idx - 1) > a.entries(j_mid, far_idx - 1));
}

TEST_CASE("superpose: zero, basis extraction, linearity") {
    const TrapConfig config = small_config();
    const TrapModel model = build_trap(config);
    const double z_mid = (config.segment_count_per_wing - 1) * config.pitch() / 2.0;
    const Grid grid = axial_grid(z_mid - 200e-6, z_mid + 200e-6, 10e-6);
    const PotentialMatrix a = assemble_matrix(model, grid);
    const Eigen::Index n = a.entries.cols();

    CHECK(superpose(a, VoltageSet::Zero(n)).values.cwiseAbs().maxCoeff() == 0.0);

    VoltageSet e3 = VoltageSet::Zero(n);
    e3[2] = 1.0;
    const AxialPotential col = superpose(a, e3);
    CHECK((col.values - a.entries.col(2)).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    VoltageSet v1(n), v2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v1[i] = dist(rng);
        v2[i] = dist(rng);
    }
    const Eigen::VectorXd lhs = superpose(a, v1 + v2).values;
    const Eigen::VectorXd rhs = superpose(a, v1).values + superpose(a, v2).values;
    const double scale = rhs.cwiseAbs().maxCoeff();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * scale);

    CHECK_THROWS_AS(superpose(a, VoltageSet::Zero(n + 1)), ArgumentError);
}

TEST_CASE("mirror-symmetric trap gives mirror-symmetric columns") {
    const TrapConfig config = small_config();  // wing_offset = 0
    const TrapModel model = build_trap(config);
    const int per_wing = config.segment_count_per_wing;
    const double z_center = (per_wing - 1) * config.pitch() / 2.0;
    // grid symmetric about the trap center
    const Grid grid = axial_grid(z_center - 400e-6, z_center + 400e-6, 10e-6);
    const PotentialMatrix a = assemble_matrix(model, grid);

    for (int wing = 0; wing < 2; ++wing) {
        for (int i = 1; i <= per_wing; ++i) {
            const int col = wing * per_wing + i - 1;
            const int mirror_col = wing * per_wing + (per_wing - i);
            for (Eigen::Index j = 0; j < grid.count; ++j) {
                const Eigen::Index j_ref = grid.count - 1 - j;
                CHECK(std::abs(a.entries(j, col) - a.entries(j_ref, mirror_col)) <=
                      1e-9);
            }
        }
    }
}

TEST_CASE("panel refinement converges on the axis") {
    TrapConfig coarse = small_config();
    coarse.panels_axial = 1;
    coarse.panels_transverse = 1;
    TrapConfig mid = coarse;
    mid.panels_axial = 2;
    mid.panels_transverse = 2;
    TrapConfig fine = coarse;
    fine.panels_axial = 4;
    fine.panels_transverse = 4;

    const double z_mid = (coarse.segment_count_per_wing - 1) * coarse.pitch() / 2.0;
    const Grid grid = axial_grid(z_mid - 200e-6, z_mid + 200e-6, 20e-6);
    const PotentialMatrix a1 = assemble_matrix(build_trap(coarse), grid);
    const PotentialMatrix a2 = assemble_matrix(build_trap(mid), grid);
    const PotentialMatrix a4 = assemble_matrix(build_trap(fine), grid);

    const double d1 = (a2.entries - a1.entries).cwiseAbs().maxCoeff();
    const double d2 = (a4.entries - a2.entries).cwiseAbs().maxCoeff();
    CHECK(d2 <= 2.0 * d1);
}

TEST_CASE("electrode index out of range") {
    const TrapModel model = build_trap(small_config());
    CHECK_THROWS_AS(solve_electrode_charges(model, 0), ArgumentError);
    CHECK_THROWS_AS(solve_electrode_charges(model, 99), ArgumentError);
}

TEST_CASE("coincident panels make the collocation system degenerate") {
    TrapModel model = single_panel_model(100e-6);
    // duplicate the panel under a second electrode
    Electrode e2;
    e2.index = 2;
    e2.wing = 1;
    e2.panel_begin = 1;
    e2.panel_end = 2;
    model.electrodes.push_back(e2);
    model.panels.push_back(model.panels[0]);
    CHECK_THROWS_AS(BemSystem{model}, NumericalError);
}
