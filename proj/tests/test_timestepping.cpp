#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <numbers>

#include "porecat/simulation.hpp"

using namespace porecat;

namespace {

constexpr double pi = std::numbers::pi;

PoreMesh mesh(int nr, int nphi, int nz, double R = 1.0, double h = 1.0) {
    CylinderSpec s;
    s.R = R;
    s.h = h;
    s.n_r = nr;
    s.n_phi = nphi;
    s.n_z = nz;
    return build_mesh(s);
}

Chemistry single(SorptionLaw law, double d = 1.0, double dS = 1.0) {
    Chemistry ch;
    ch.species = {{"A"}, {d}, {dS}};
    ch.sorption = {std::move(law)};
    ch.reaction = ReactionNetwork(1);
    return ch;
}

Chemistry r1_henry(double k_re, double kappa) {
    Chemistry ch;
    ch.species = {{"A", "B", "P"}, {1, 1, 1}, {1, 1, 1}};
    ch.sorption.assign(3, SorptionLaw(HenryLaw{1, 1}));
    ch.reaction = ReactionNetwork::r1(k_re, kappa);
    ch.conserved = {{1, 0, 1}, {0, 1, 1}};
    return ch;
}

SchemeConfig scheme(SchemeKind k, double dt, double t_end) {
    SchemeConfig s;
    s.kind = k;
    s.dt = dt;
    s.t_end = t_end;
    return s;
}

BulkState constant_bulk(const Discretization& d, std::vector<double> v) {
    BulkState s;
    for (double x : v) s.push_back(Vector::Constant(d.n_cells(), x));
    return s;
}

SurfaceState constant_surface(const Discretization& d, std::vector<double> v) {
    SurfaceState s;
    for (double x : v) s.push_back(Vector::Constant(d.n_patches(), x));
    return s;
}

} // namespace

TEST(StableDt, ZeroVelocityZeroRatesIsUnbounded) {
    Discretization d(mesh(3, 4, 5), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto rep = stable_dt(d, single(SorptionLaw()), 0.9);
    EXPECT_TRUE(std::isinf(rep.dt));
    EXPECT_EQ(rep.limiting, "none");
}

TEST(StableDt, UniformAxialFlowGivesCfl) {
    const auto m = mesh(2, 3, 10, 1.0, 1.0);
    TabulatedVelocity u;
    u.normal_velocity.assign(m.bulk.faces.size(), 0.0);
    for (std::size_t f = 0; f < m.bulk.faces.size(); ++f)
        if (m.bulk.faces[f].axis == Axis::z) u.normal_velocity[f] = 2.0 * m.bulk.faces[f].normal[2];
    Discretization d(m, u, AdvectionScheme::upwind, 1);
    const auto rep = stable_dt(d, single(SorptionLaw()), 0.5);
    EXPECT_NEAR(rep.dt, 0.5 * 0.2 / 2.0, 1e-14);
    EXPECT_EQ(rep.limiting, "advective");
}

TEST(StableDt, StiffDesorptionScalesInversely) {
    Discretization d(mesh(2, 2, 2), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const double a = stable_dt(d, single(SorptionLaw(HenryLaw{1, 1e6})), 1.0).dt;
    const double b = stable_dt(d, single(SorptionLaw(HenryLaw{1, 2e6})), 1.0).dt;
    EXPECT_NEAR(a / b, 2.0, 1e-5);
    EXPECT_NEAR(a, 1e-6, 1e-11);
}

TEST(StableDt, EnforcedByRun) {
    Discretization d(mesh(2, 2, 4), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw(HenryLaw{1, 100}));
    ScenarioSpec sc{{Profile{ProfileKind::constant, 1}}, {Profile{}}, {0.0}, 0.2, true};
    EXPECT_THROW(run(d, ch, sc, scheme(SchemeKind::imex_euler, 0.1, 0.2), {}), ConfigError);
    auto s = scheme(SchemeKind::backward_euler_newton, 0.1, 0.2);
    EXPECT_NO_THROW(run(d, ch, sc, s, {}));
}

TEST(Step, ZeroStatesStayZero) {
    Discretization d(mesh(3, 4, 5), PoiseuilleVelocity{1.0}, AdvectionScheme::upwind, 1);
    const auto ch = r1_henry(2, 0.5);
    CatalysisTerms terms(d, ch, {0, 0, 0});
    for (auto k : {SchemeKind::imex_euler, SchemeKind::imex_cn, SchemeKind::backward_euler_newton}) {
        Stepper st(d, ch.species, terms, scheme(k, 0.01, 1), {});
        const auto r = st.step(constant_bulk(d, {0, 0, 0}), constant_surface(d, {0, 0, 0}), 0, 0.01);
        for (const auto& v : r.bulk) EXPECT_EQ(v.lpNorm<Eigen::Infinity>(), 0.0);
        for (const auto& v : r.surface) EXPECT_EQ(v.lpNorm<Eigen::Infinity>(), 0.0);
    }
}

TEST(Step, UniformHenryMatchesExponential) {
    // one radial ring keeps a uniform state uniform; the lumped pair is
    // V c' = -A r, cs' = r with r = k_ad c - k_de cs
    const double R = 1.0, h = 1.0, ka = 2.0, kd = 0.5;
    Discretization d(mesh(1, 4, 3, R, h), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw(HenryLaw{ka, kd}));
    CatalysisTerms terms(d, ch, {0.0});
    const double V = pi * R * R * 2 * h, A = 2 * pi * R * 2 * h;
    Eigen::Matrix2d J;
    J << -ka * A / V, kd * A / V, ka, -kd;
    const Eigen::Vector2d y0(1.0, 0.25);
    std::vector<double> errs;
    for (double dt : {0.02, 0.01, 0.005}) {
        Stepper st(d, ch.species, terms, scheme(SchemeKind::imex_euler, dt, 1), {});
        const auto r = st.step(constant_bulk(d, {y0[0]}), constant_surface(d, {y0[1]}), 0, dt);
        const Eigen::Vector2d ex = (J * dt).exp() * y0;
        EXPECT_LT((r.bulk[0].array() - r.bulk[0][0]).abs().maxCoeff(), 1e-14);
        const double e = std::max(std::abs(r.bulk[0][0] - ex[0]), std::abs(r.surface[0][0] - ex[1]));
        EXPECT_LT(e, 2.0 * dt * dt * (J * J * y0).lpNorm<Eigen::Infinity>());
        errs.push_back(e);
    }
    EXPECT_NEAR(std::log2(errs[0] / errs[1]), 2.0, 0.1);
    EXPECT_NEAR(std::log2(errs[1] / errs[2]), 2.0, 0.1);
}

TEST(Step, EulerDampsCosineModeExactly) {
    const double h = 1.0, dc = 0.3, dt = 0.05;
    const int nz = 32;
    Discretization d(mesh(1, 1, nz, 1.0, h), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw(), dc);
    CatalysisTerms terms(d, ch, {0.0});
    LinearSolverConfig solver;
    solver.rel_tol = 1e-14;
    Stepper st(d, ch.species, terms, scheme(SchemeKind::imex_euler, dt, 1), solver);
    for (int k : {1, 2, 5}) {
        Vector v(d.n_cells());
        for (int c = 0; c < d.n_cells(); ++c) v[c] = std::cos(k * pi * (d.mesh.bulk.centers[c].z + h) / (2 * h));
        const auto r = st.step({v}, constant_surface(d, {0.0}), 0, dt);
        const double factor = 1.0 / (1.0 + dt * dc * discrete_bulk_mode_eigenvalue(k, h, nz));
        EXPECT_LT((r.bulk[0] - factor * v).lpNorm<Eigen::Infinity>(), 1e-12) << k;
    }
}

TEST(Step, CrankNicolsonModeFactor) {
    const double h = 1.0, dc = 0.3, dt = 0.05;
    const int nz = 16;
    Discretization d(mesh(1, 1, nz, 1.0, h), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw(), dc);
    CatalysisTerms terms(d, ch, {0.0});
    LinearSolverConfig solver;
    solver.rel_tol = 1e-14;
    Stepper st(d, ch.species, terms, scheme(SchemeKind::imex_cn, dt, 1), solver);
    Vector v(d.n_cells());
    for (int c = 0; c < d.n_cells(); ++c) v[c] = std::cos(pi * (d.mesh.bulk.centers[c].z + h) / (2 * h));
    const auto r = st.step({v}, constant_surface(d, {0.0}), 0, dt);
    const double a = dt * dc * discrete_bulk_mode_eigenvalue(1, h, nz);
    EXPECT_LT((r.bulk[0] - (1 - a / 2) / (1 + a / 2) * v).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Newton, LinearProblemConvergesInOneIteration) {
    Discretization d(mesh(3, 4, 6), PoiseuilleVelocity{1.0}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw(HenryLaw{1, 0.5}));
    CatalysisTerms terms(d, ch, {-1.0});
    Stepper st(d, ch.species, terms, scheme(SchemeKind::backward_euler_newton, 0.1, 1), {});
    const auto r = st.step(constant_bulk(d, {0.3}), constant_surface(d, {0.7}), 0, 0.1);
    EXPECT_EQ(r.newton_iterations, 1);
    EXPECT_EQ(r.halvings, 0);
}

TEST(Newton, R1EquilibriumIsFixedPoint) {
    Discretization d(mesh(3, 4, 5), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = r1_henry(1, 1);
    CatalysisTerms terms(d, ch, {0, 0, 0});
    for (auto k : {SchemeKind::backward_euler_newton, SchemeKind::imex_euler, SchemeKind::imex_cn}) {
        Stepper st(d, ch.species, terms, scheme(k, 0.05, 1), {});
        BulkState c = constant_bulk(d, {1, 1, 1});
        SurfaceState cs = constant_surface(d, {1, 1, 1});
        for (int n = 0; n < 10; ++n) {
            auto r = st.step(c, cs, n * 0.05, 0.05);
            c = std::move(r.bulk);
            cs = std::move(r.surface);
        }
        for (int i = 0; i < 3; ++i) {
            EXPECT_LT((c[i].array() - 1).abs().maxCoeff(), 1e-12);
            EXPECT_LT((cs[i].array() - 1).abs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Newton, StiffClosedPoreStaysBoundedAndNonnegative) {
    Discretization d(mesh(4, 4, 8), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw(HenryLaw{1, 1e6}));
    ScenarioSpec sc{{Profile{ProfileKind::axial_cosine, 1, 0.5, 1}}, {Profile{ProfileKind::constant, 2}}, {0.0}, 2, true};
    RunOptions opt;
    opt.keep_ledger_rows = true;
    const auto res = run(d, ch, sc, scheme(SchemeKind::backward_euler_newton, 0.1, 2), {}, opt);
    EXPECT_GE(res.report.min_bulk, -1e-12);
    EXPECT_GE(res.report.min_surface, -1e-12);
    EXPECT_FALSE(res.report.blow_up);
    EXPECT_LT(res.report.ledger_max_residual, 1e-10);
    // the lumped system relaxes to the Henry equilibrium in mean
    const double V = pi * 2, A = 4 * pi;
    const double M0 = V * 1.0 + A * 2.0;
    const auto eq = henry_equilibrium(V, A, 1, 1e6, M0);
    const double mean = bulk_mass(d, res.bulk[0]) / V;
    EXPECT_NEAR(mean, eq.c, 1e-6 * eq.c);
    EXPECT_LT(res.bulk[0].maxCoeff(), 1.5 + 2.0 * A / V);
}

TEST(Run, DtUnderflowThrows) {
    Discretization d(mesh(1, 1, 2), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw());
    ScenarioSpec sc{{Profile{}}, {Profile{}}, {0.0}, 1.0, true};
    auto s = scheme(SchemeKind::imex_euler, 1e-15, 1.0);
    EXPECT_THROW(run(d, ch, sc, s, {}), SolverError);
}

TEST(Run, NonFiniteInputRejected) {
    Discretization d(mesh(1, 1, 2), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw());
    CatalysisTerms terms(d, ch, {0.0});
    Stepper st(d, ch.species, terms, scheme(SchemeKind::imex_euler, 0.1, 1), {});
    BulkState c = constant_bulk(d, {1});
    c[0][0] = std::nan("");
    EXPECT_THROW(st.step(c, constant_surface(d, {0}), 0, 0.1), SolverError);
}

TEST(Run, ClosedHenryReachesEquilibrium) {
    Discretization d(mesh(3, 2, 4), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const auto ch = single(SorptionLaw(HenryLaw{1, 1}));
    ScenarioSpec sc{{Profile{ProfileKind::constant, 2}}, {Profile{ProfileKind::constant, 0.5}}, {0.0}, 50, true};
    const auto res = run(d, ch, sc, scheme(SchemeKind::imex_euler, 0.05, 50), {});
    const double V = 2 * pi, A = 4 * pi;
    const auto eq = henry_equilibrium(V, A, 1, 1, 2 * V + 0.5 * A);
    EXPECT_LT((res.bulk[0].array() - eq.c).abs().maxCoeff(), 1e-8);
    EXPECT_LT((res.surface[0].array() - eq.cs).abs().maxCoeff(), 1e-8);
}
