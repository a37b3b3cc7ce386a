#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "trapwave/errors.hpp"
#include "trapwave/solver.hpp"

using namespace trapwave;

namespace {

TargetPotential full_target(const Eigen::VectorXd& phi) {
    TargetPotential t;
    t.values = phi;
    t.window = RowWindow{0, phi.size()};
    return t;
}

Eigen::MatrixXd random_matrix(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Eigen::MatrixXd a(m, n);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            a(j, i) = dist(rng);
    return a;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = dist(rng);
    return v;
}

// Independent oracle: the continuity solution is the unique minimizer of
// ||A v - phi||^2 + alpha^2 ||v - v_prev||^2, i.e. the solution of
// (A^T A + alpha^2 I) v = A^T phi + alpha^2 v_prev by direct dense solve.
Eigen::VectorXd normal_equations_oracle(const Eigen::MatrixXd& a,
                                        const Eigen::VectorXd& phi, double alpha,
                                        const Eigen::VectorXd& v_prev) {
    const Eigen::Index n = a.cols();
    const Eigen::MatrixXd lhs =
        a.transpose() * a + alpha * alpha * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd rhs = a.transpose() * phi + alpha * alpha * v_prev;
    return lhs.ldlt().solve(rhs);
}

}  // namespace

TEST_CASE("decompose: diagonal matrix") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 0) = 3.0;
    a(1, 1) = 1.0;
    const SvdFactors f = decompose(a);
    REQUIRE(f.s.size() == 2);
    CHECK(f.s[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(f.s[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("decompose: reconstruction and orthogonality on random matrices") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::MatrixXd a = random_matrix(40, 8, rng);
        const SvdFactors f = decompose(a);
        CHECK(f.u.rows() == 40);
        CHECK(f.u.cols() == 40);
        CHECK(f.w.rows() == 8);

        const Eigen::MatrixXd recon =
            f.u.leftCols(f.s.size()) * f.s.asDiagonal() * f.w.transpose();
        const double scale = a.cwiseAbs().maxCoeff();
        CHECK((recon - a).cwiseAbs().maxCoeff() <= 1e-10 * scale);

        const Eigen::MatrixXd iu =
            f.u.transpose() * f.u - Eigen::MatrixXd::Identity(40, 40);
        const Eigen::MatrixXd iw =
            f.w.transpose() * f.w - Eigen::MatrixXd::Identity(8, 8);
        CHECK(iu.cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(iw.cwiseAbs().maxCoeff() <= 1e-12);

        for (Eigen::Index k = 1; k < f.s.size(); ++k)
            CHECK(f.s[k] <= f.s[k - 1]);
        CHECK(f.s.minCoeff() >= 0.0);
    }
}

TEST_CASE("decompose: rank-1 matrix has exactly one significant value") {
    std::mt19937_64 rng(7);
    const Eigen::VectorXd u = random_vector(20, rng);
    const Eigen::VectorXd w = random_vector(6, rng);
    const Eigen::MatrixXd a = u * w.transpose();
    const SvdFactors f = decompose(a);
    int above = 0;
    for (Eigen::Index k = 0; k < f.s.size(); ++k)
        if (f.s[k] > 1e-10 * f.s_max())
            ++above;
    CHECK(above == 1);
}

TEST_CASE("tikhonov: identity at alpha = 0 inverts exactly") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(5, 5);
    std::mt19937_64 rng(3);
    const Eigen::VectorXd phi = random_vector(5, rng);
    const SvdFactors f = decompose(a);
    const SolveResult r = tikhonov_apply(f, full_target(phi), 0.0);
    CHECK((r.voltages - phi).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(r.dropped.empty());
}

TEST_CASE("tikhonov: filter value is exactly 1/2 at s = alpha = 1") {
    Eigen::MatrixXd a(1, 1);
    a(0, 0) = 1.0;
    const SvdFactors f = decompose(a);
    Eigen::VectorXd phi(1);
    phi[0] = 2.0;
    const SolveResult r = tikhonov_apply(f, full_target(phi), 1.0);
    // s/(s^2 + alpha^2) = 1/2, applied to phi = 2 gives exactly 1
    CHECK(r.voltages[0] == 1.0);
}

TEST_CASE("tikhonov: huge alpha suppresses the solution") {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd a = random_matrix(30, 6, rng);
    const Eigen::VectorXd phi = random_vector(30, rng);
    const SvdFactors f = decompose(a);

    // oracle: pseudo-inverse solution by a different decomposition route
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    const Eigen::VectorXd v_pinv = cod.solve(phi);

    const double alpha = 1e6 * f.s_max();
    const SolveResult r = tikhonov_apply(f, full_target(phi), alpha);
    CHECK(r.voltages.norm() <= 1e-5 * v_pinv.norm());
}

TEST_CASE("tikhonov: alpha = 0 on a singular matrix drops the null directions") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 3);
    a(0, 0) = 2.0;
    a(1, 1) = 1.0;  // third column identically zero -> one zero singular value
    const SvdFactors f = decompose(a);
    Eigen::VectorXd phi(4);
    phi << 2.0, 3.0, 0.5, -0.5;
    const SolveResult r = tikhonov_apply(f, full_target(phi), 0.0);
    CHECK(r.dropped.size() == 1);
    CHECK(r.voltages.allFinite());
}

TEST_CASE("continuity: infinite-alpha limit returns v_prev") {
    std::mt19937_64 rng(13);
    const Eigen::MatrixXd a = random_matrix(25, 7, rng);
    const Eigen::VectorXd phi = random_vector(25, rng);
    const Eigen::VectorXd v_prev = random_vector(7, rng);
    const SvdFactors f = decompose(a);
    const double alpha = 1e8 * f.s_max();
    const SolveResult r = continuity_apply(f, full_target(phi), alpha, v_prev);
    CHECK((r.voltages - v_prev).norm() <= 1e-6 * v_prev.norm());
}

TEST_CASE("continuity: v_prev = 0 reduces to tikhonov exactly") {
    std::mt19937_64 rng(17);
    const Eigen::MatrixXd a = random_matrix(25, 7, rng);
    const Eigen::VectorXd phi = random_vector(25, rng);
    const SvdFactors f = decompose(a);
    const double alpha = 0.1 * f.s_max();
    const SolveResult with_zero =
        continuity_apply(f, full_target(phi), alpha, Eigen::VectorXd::Zero(7));
    const SolveResult plain = tikhonov_apply(f, full_target(phi), alpha);
    CHECK((with_zero.voltages - plain.voltages).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("continuity: matches the normal-equations oracle") {
    std::mt19937_64 rng(19);
    const Eigen::MatrixXd a = random_matrix(40, 8, rng);
    const Eigen::VectorXd phi = random_vector(40, rng);
    const Eigen::VectorXd v_prev = random_vector(8, rng);
    const SvdFactors f = decompose(a);
    const double alpha = 0.3 * f.s_max();
    const SolveResult r = continuity_apply(f, full_target(phi), alpha, v_prev);
    const Eigen::VectorXd oracle = normal_equations_oracle(a, phi, alpha, v_prev);
    CHECK((r.voltages - oracle).norm() <= 1e-10 * oracle.norm());
}

TEST_CASE("continuity: wide matrices pass null-space components through") {
    std::mt19937_64 rng(23);
    const Eigen::MatrixXd a = random_matrix(5, 9, rng);  // N > M
    const Eigen::VectorXd phi = random_vector(5, rng);
    const Eigen::VectorXd v_prev = random_vector(9, rng);
    const SvdFactors f = decompose(a);
    const double alpha = 0.2 * f.s_max();
    const SolveResult r = continuity_apply(f, full_target(phi), alpha, v_prev);
    const Eigen::VectorXd oracle = normal_equations_oracle(a, phi, alpha, v_prev);
    CHECK((r.voltages - oracle).norm() <= 1e-10 * oracle.norm());
}

TEST_CASE("continuity: alpha <= 0 is an argument error") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    const SvdFactors f = decompose(a);
    const Eigen::VectorXd phi = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(continuity_apply(f, full_target(phi), 0.0, phi), ArgumentError);
    CHECK_THROWS_AS(continuity_apply(f, full_target(phi), -1.0, phi), ArgumentError);
}

TEST_CASE("monotone continuity: distance to v_prev non-increasing in alpha") {
    std::mt19937_64 rng(29);
    const Eigen::MatrixXd a = random_matrix(30, 6, rng);
    const Eigen::VectorXd phi = random_vector(30, rng);
    const Eigen::VectorXd v_prev = random_vector(6, rng);
    const SvdFactors f = decompose(a);
    double prev_dist = std::numeric_limits<double>::infinity();
    for (double alpha = 1e-4 * f.s_max(); alpha < 1e4 * f.s_max(); alpha *= 4.0) {
        const SolveResult r = continuity_apply(f, full_target(phi), alpha, v_prev);
        const double dist = (r.voltages - v_prev).norm();
        CHECK(dist <= prev_dist * (1.0 + 1e-12));
        prev_dist = dist;
    }
}

TEST_CASE("filter factors stay in [0,1) and grow with s") {
    const double alpha = 0.7;
    double prev = -1.0;
    for (double s : {1e-4, 1e-2, 0.3, 0.7, 2.0, 50.0}) {
        const double factor = s * s / (s * s + alpha * alpha);
        CHECK(factor >= 0.0);
        CHECK(factor < 1.0);
        CHECK(factor > prev);
        prev = factor;
    }
}

TEST_CASE("continuity solution minimizes the regularized objective") {
    std::mt19937_64 rng(31);
    const Eigen::MatrixXd a = random_matrix(30, 6, rng);
    const Eigen::VectorXd phi = random_vector(30, rng);
    const Eigen::VectorXd v_prev = random_vector(6, rng);
    const SvdFactors f = decompose(a);
    const double alpha = 0.4 * f.s_max();
    const SolveResult r = continuity_apply(f, full_target(phi), alpha, v_prev);

    auto objective = [&](const Eigen::VectorXd& v) {
        return (a * v - phi).squaredNorm() + alpha * alpha * (v - v_prev).squaredNorm();
    };
    const double at_solution = objective(r.voltages);
    std::normal_distribution<double> dist;
    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd delta(6);
        for (Eigen::Index i = 0; i < 6; ++i)
            delta[i] = 1e-4 * dist(rng);
        CHECK(objective(r.voltages + delta) >= at_solution);
    }
}

TEST_CASE("alpha = 0 on a square nonsingular system reproduces phi") {
    std::mt19937_64 rng(37);
    const Eigen::MatrixXd a =
        random_matrix(6, 6, rng) + 3.0 * Eigen::MatrixXd::Identity(6, 6);
    const Eigen::VectorXd phi = random_vector(6, rng);
    const SvdFactors f = decompose(a);
    const SolveResult r = tikhonov_apply(f, full_target(phi), 0.0);
    CHECK((a * r.voltages - phi).norm() <= 1e-10 * phi.norm());
}

TEST_CASE("select_alpha: already-feasible solve returns the ladder start") {
    // scale the target so the unregularized solution is far below the bound
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXd phi = Eigen::VectorXd::Constant(6, 1e-3);
    const SvdFactors f = decompose(a);
    const AlphaSelection sel =
        select_alpha(f, full_target(phi), Eigen::VectorXd::Zero(6), 10.0);
    CHECK(sel.steps == 0);
    CHECK(sel.alpha == doctest::Approx(1e-6 * f.s_max()));
    CHECK(sel.max_abs_voltage <= 10.0);
}

TEST_CASE("select_alpha: scaled-up target gets regularized into the bound") {
    std::mt19937_64 rng(41);
    Eigen::MatrixXd a = random_matrix(30, 6, rng);
    a.col(5) *= 1e-9;  // one nearly-unused electrode makes the system stiff
    const SvdFactors f = decompose(a);
    Eigen::VectorXd phi = 1000.0 * random_vector(30, rng);
    const AlphaSelection sel =
        select_alpha(f, full_target(phi), Eigen::VectorXd::Zero(6), 10.0);
    CHECK(sel.max_abs_voltage <= 10.0);
    CHECK(sel.alpha > 1e-6 * f.s_max());
    CHECK(sel.steps > 0);
}

TEST_CASE("select_alpha: v_prev outside the bound is rejected") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    const SvdFactors f = decompose(a);
    const Eigen::VectorXd phi = Eigen::VectorXd::Ones(3);
    Eigen::VectorXd bad = Eigen::VectorXd::Constant(3, 11.0);
    CHECK_THROWS_AS(select_alpha(f, full_target(phi), bad, 10.0), ArgumentError);
}

TEST_CASE("select_alpha: rail-pinned history climbs the ladder to the asymptote") {
    // v' = (s y + alpha^2 c)/(s^2 + alpha^2) approaches the rail from above as
    // alpha grows; the ladder climbs deep before the bound is met.
    Eigen::MatrixXd a(1, 1);
    a(0, 0) = 1.0;
    const SvdFactors f = decompose(a);
    Eigen::VectorXd phi(1);
    phi << 1e6;
    Eigen::VectorXd v_prev(1);
    v_prev << 10.0;
    const AlphaSelection sel = select_alpha(f, full_target(phi), v_prev, 10.0);
    CHECK(sel.max_abs_voltage <= 10.0);
    CHECK(sel.steps > 30);
    CHECK(sel.voltages[0] == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("select_alpha: bisection refinement finds a smaller feasible alpha") {
    std::mt19937_64 rng(43);
    Eigen::MatrixXd a = random_matrix(30, 6, rng);
    a.col(5) *= 1e-9;
    const SvdFactors f = decompose(a);
    Eigen::VectorXd phi = 1000.0 * random_vector(30, rng);
    const AlphaSelection plain =
        select_alpha(f, full_target(phi), Eigen::VectorXd::Zero(6), 10.0);
    AlphaSearchOptions options;
    options.bisection_refine = true;
    const AlphaSelection refined =
        select_alpha(f, full_target(phi), Eigen::VectorXd::Zero(6), 10.0, options);
    CHECK(refined.alpha <= plain.alpha);
    CHECK(refined.alpha > plain.alpha / 2.0);
    CHECK(refined.max_abs_voltage <= 10.0);
    // smaller alpha reproduces the target at least as well
    CHECK(refined.residual_norm <= plain.residual_norm * (1.0 + 1e-12));
}
