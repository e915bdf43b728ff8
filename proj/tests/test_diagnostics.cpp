#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

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

Chemistry henry(double ka, double kd) {
    Chemistry ch;
    ch.species = {{"A"}, {1.0}, {1.0}};
    ch.sorption = {SorptionLaw(HenryLaw{ka, kd})};
    ch.reaction = ReactionNetwork(1);
    return ch;
}

Chemistry r1(double k_re, double kappa) {
    Chemistry ch;
    ch.species = {{"A", "B", "P"}, {1, 0.5, 2}, {1, 1, 0.5}};
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

Profile constant(double v) { return Profile{ProfileKind::constant, v}; }

LinearSolverConfig tight(KrylovMethod m = KrylovMethod::cg) {
    LinearSolverConfig s;
    s.method = m;
    s.rel_tol = 1e-13;
    return s;
}

} // namespace

TEST(Ledger, ClosedPoreStepResidual) {
    Discretization d(mesh(3, 4, 6), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{Profile{ProfileKind::axial_cosine, 1, 0.8, 1}}, {constant(0.3)}, {0.0}, 2, true};
    const auto res = run(d, henry(2, 1), sc, scheme(SchemeKind::imex_euler, 0.01, 2), tight());
    EXPECT_LE(res.ledger.max_step_residual(), 1e-12);
    EXPECT_NEAR(res.ledger.total(0), res.ledger.initial_total(0), 1e-12 * res.ledger.initial_total(0));
}

TEST(Ledger, ConstantInflowAccumulatesExactly) {
    const double R = 0.8;
    Discretization d(mesh(3, 4, 6, R, 1.0), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const double t_end = 1.5;
    ScenarioSpec sc{{constant(0)}, {constant(0)}, {-1.0}, t_end, false};
    for (auto k : {SchemeKind::imex_euler, SchemeKind::imex_cn, SchemeKind::backward_euler_newton}) {
        const auto res = run(d, henry(1, 1), sc, scheme(k, 0.01, t_end), {});
        const double expect = pi * R * R * t_end;
        EXPECT_NEAR(res.ledger.total(0) - res.ledger.initial_total(0), expect, 1e-9 * expect);
        EXPECT_NEAR(res.ledger.cumulative_inflow(0), expect, 1e-12 * expect);
        EXPECT_EQ(res.ledger.cumulative_outflow(0), 0.0);
    }
}

TEST(Ledger, R1ConservedCombinations) {
    Discretization d(mesh(2, 3, 4), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{constant(1.0), Profile{ProfileKind::axial_cosine, 0.7, 0.3, 1}, constant(0.1)},
                    {constant(0.5), constant(0.2), constant(0.0)},
                    {0, 0, 0},
                    5,
                    true};
    const auto res = run(d, r1(2, 0.5), sc, scheme(SchemeKind::imex_euler, 0.005, 5), {});
    ASSERT_EQ(res.ledger.conserved_drift().size(), 2u);
    for (double v : res.ledger.conserved_drift()) EXPECT_LT(v, 1e-9);
    EXPECT_LT(res.report.transfer_mismatch, 1e-13);
    EXPECT_GT(std::abs(res.ledger.cumulative_reaction(2)), 0.0);
}

TEST(Ledger, OpenPoreBalancesThroughput) {
    Discretization d(mesh(3, 4, 8), PoiseuilleVelocity{1.0}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{constant(0.5), constant(0), constant(0)}, {constant(0), constant(0), constant(0)},
                    {-1, -0.5, 0}, 2, false};
    RunOptions opt;
    opt.keep_ledger_rows = true;
    const auto res = run(d, r1(1, 1), sc, scheme(SchemeKind::imex_euler, 0.005, 2), tight(KrylovMethod::bicgstab), opt);
    EXPECT_LT(res.ledger.max_step_residual(), 1e-11);
    EXPECT_LT(res.ledger.max_cumulative_residual(), 1e-9);
    for (double v : res.ledger.conserved_drift()) EXPECT_LT(v, 1e-9);
    EXPECT_GT(res.ledger.cumulative_outflow(0), 0.0);
    EXPECT_EQ(static_cast<int>(res.ledger.rows().size()), res.steps + 1);
}

TEST(Nonnegativity, Flags) {
    BulkState c{Vector::Constant(5, 1.0), Vector::Constant(5, 2.0)};
    SurfaceState cs{Vector::Constant(3, 0.5), Vector::Zero(3)};
    auto r = nonnegativity_monitor(c, cs, 7);
    EXPECT_FALSE(r.flag.has_value());
    EXPECT_EQ(r.min_bulk, 1.0);
    EXPECT_EQ(r.min_surface, 0.0);
    c[1][3] = -1e-6;
    r = nonnegativity_monitor(c, cs, 7);
    ASSERT_TRUE(r.flag.has_value());
    EXPECT_EQ(r.flag->species, 1);
    EXPECT_EQ(r.flag->index, 3);
    EXPECT_FALSE(r.flag->surface);
    EXPECT_EQ(r.flag->step, 7);
    EXPECT_EQ(r.flag->value, -1e-6);
    c[1][3] = -1e-13;
    EXPECT_FALSE(nonnegativity_monitor(c, cs).flag.has_value());
}

TEST(Nonnegativity, MonitoredRunStaysNonnegative) {
    Discretization d(mesh(4, 6, 8), PoiseuilleVelocity{2.0}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{constant(0), constant(0.2), constant(0)},
                    {constant(0), constant(0), constant(1)},
                    {-1, 0, 0},
                    1,
                    false};
    const auto res = run(d, r1(5, 0.1), sc, scheme(SchemeKind::imex_euler, 0.005, 1), {});
    EXPECT_GE(res.report.min_bulk, -1e-12);
    EXPECT_GE(res.report.min_surface, -1e-12);
    EXPECT_FALSE(res.report.first_violation.has_value());
}

TEST(Gronwall, ExactExponential) {
    std::vector<double> t, y;
    for (int k = 0; k <= 20; ++k) {
        t.push_back(0.1 * k);
        y.push_back(2.5 * std::exp(-0.7 * 0.1 * k));
    }
    const auto g = gronwall_fit(t, y);
    EXPECT_NEAR(g.M, 2.5, 1e-10);
    EXPECT_NEAR(g.omega, -0.7, 1e-10);
    EXPECT_NEAR(g.violation, 0.0, 1e-10);
}

TEST(Gronwall, ConstantSeries) {
    std::vector<double> t{0, 1, 2, 3, 4}, y(5, 3.0);
    const auto g = gronwall_fit(t, y);
    EXPECT_NEAR(g.omega, 0.0, 1e-10);
    EXPECT_NEAR(g.M, 3.0, 1e-10);
}

TEST(Gronwall, RejectsBadSeries) {
    std::vector<double> t{0, 1, 2}, y{1, 0, 1};
    EXPECT_THROW(gronwall_fit(t, y), ConfigError);
    EXPECT_THROW(gronwall_fit(std::vector<double>{0, 1}, std::vector<double>{1, 1}), ConfigError);
}

TEST(Gronwall, ClosedHenryRunIsNotGrowing) {
    Discretization d(mesh(3, 4, 6), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{Profile{ProfileKind::axial_cosine, 1, 0.5, 1}}, {constant(2.0)}, {0.0}, 10, true};
    const auto res = run(d, henry(1, 1), sc, scheme(SchemeKind::imex_euler, 0.02, 10), {});
    ASSERT_TRUE(res.report.gronwall.has_value());
    EXPECT_LE(res.report.gronwall->omega, 0.01);
}

TEST(Comparison, HenryWithKdePasses) {
    Discretization d(mesh(3, 4, 6), PoiseuilleVelocity{1.0}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{constant(0.5)}, {constant(1.0)}, {-1.0}, 1, false};
    const auto v = comparison_run(d, henry(1, 2), sc, scheme(SchemeKind::imex_euler, 0.005, 1), {}, 0, 2.0);
    EXPECT_TRUE(v.passed) << v.max_excess;
    EXPECT_LE(v.max_excess, 1e-10);
}

TEST(Comparison, ZeroDataIsTrivial) {
    Discretization d(mesh(2, 2, 4), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{constant(0)}, {constant(0)}, {0.0}, 0.5, true};
    const auto v = comparison_run(d, henry(1, 1), sc, scheme(SchemeKind::imex_euler, 0.01, 0.5), {}, 0, 1.0);
    EXPECT_TRUE(v.passed);
    EXPECT_EQ(v.max_excess, 0.0);
}

TEST(Comparison, UndersizedConstantIsCaught) {
    Discretization d(mesh(3, 4, 6), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    const double kd = 4.0;
    ScenarioSpec sc{{constant(0)}, {constant(10.0)}, {0.0}, 1, true};
    const auto s = scheme(SchemeKind::imex_euler, 0.002, 1);
    EXPECT_TRUE(comparison_run(d, henry(1, kd), sc, s, {}, 0, kd).passed);
    const auto bad = comparison_run(d, henry(1, kd), sc, s, {}, 0, kd / 2);
    EXPECT_FALSE(bad.passed);
    EXPECT_GT(bad.max_excess, 0.0);
}

TEST(Comparison, RejectsCrankNicolson) {
    Discretization d(mesh(1, 1, 2), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    ScenarioSpec sc{{constant(0)}, {constant(0)}, {0.0}, 0.1, true};
    EXPECT_THROW(comparison_run(d, henry(1, 1), sc, scheme(SchemeKind::imex_cn, 0.01, 0.1), {}, 0, 1.0), ConfigError);
}

TEST(SurfaceComparison, PositiveSourceMakesPositive) {
    const auto m = mesh(1, 8, 6);
    const int n = m.surface.n_patches();
    const auto v = surface_comparison(m.surface, 1.0, Vector::Ones(n), Vector::Zero(n), 0.01, 1);
    EXPECT_EQ(v.verdict, Verdict::pass);
    // one implicit step from zero with unit load: the constant dt
    const auto v2 = surface_comparison(m.surface, 1.0, Vector::Ones(n), Vector::Constant(n, 1e-300), 0.01, 1);
    EXPECT_GT(v2.min_value, 0.0);
}

TEST(SurfaceComparison, ShiftedCosineStaysNonnegative) {
    const auto m = mesh(1, 16, 8);
    const int n = m.surface.n_patches();
    Vector v0(n);
    for (int p = 0; p < n; ++p) v0[p] = 1.0 + std::cos(2 * m.surface.phi_centers[p]) * std::cos(pi * (m.surface.z_centers[p] + 1) / 2);
    const auto v = surface_comparison(m.surface, 0.5, Vector::Zero(n), v0, 0.05, 20);
    EXPECT_EQ(v.verdict, Verdict::pass);
    EXPECT_GE(v.min_value, 0.0);
}

TEST(SurfaceComparison, NegativeSourceIsNotApplicable) {
    const auto m = mesh(1, 8, 6);
    const int n = m.surface.n_patches();
    const auto v = surface_comparison(m.surface, 1.0, Vector::Constant(n, -1.0), Vector::Zero(n), 0.01, 3);
    EXPECT_EQ(v.verdict, Verdict::not_applicable);
    EXPECT_LT(v.min_value, 0.0);
}

TEST(Norms, WeightedValues) {
    Discretization d(mesh(2, 3, 4), ZeroVelocity{}, AdvectionScheme::upwind, 1);
    BulkState c{Vector::Constant(d.n_cells(), 2.0)};
    SurfaceState cs{Vector::Constant(d.n_patches(), -3.0)};
    const auto s = norms(d, c, cs, 0.5);
    EXPECT_EQ(s.t, 0.5);
    EXPECT_DOUBLE_EQ(s.bulk_linf, 2.0);
    EXPECT_DOUBLE_EQ(s.surface_linf, 3.0);
    EXPECT_NEAR(s.bulk_l2, 2.0 * std::sqrt(2 * pi), 1e-12);
    EXPECT_NEAR(s.surface_l2, 3.0 * std::sqrt(4 * pi), 1e-12);
    EXPECT_DOUBLE_EQ(s.linf(), 3.0);
}
