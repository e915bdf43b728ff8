#include <gtest/gtest.h>

#include <numbers>

#include "porecat/velocity.hpp"

using namespace porecat;

namespace {

PoreMesh mesh(int nr = 4, int nphi = 6, int nz = 5, double R = 1.0, double h = 1.0) {
    CylinderSpec s;
    s.R = R;
    s.h = h;
    s.n_r = nr;
    s.n_phi = nphi;
    s.n_z = nz;
    return build_mesh(s);
}

TabulatedVelocity uniform_axial(const BulkMesh& m, double u) {
    TabulatedVelocity t;
    t.normal_velocity.resize(m.faces.size(), 0.0);
    for (std::size_t f = 0; f < m.faces.size(); ++f)
        if (m.faces[f].axis == Axis::z) t.normal_velocity[f] = u * m.faces[f].normal[2];
    return t;
}

} // namespace

TEST(EvalVelocity, PoiseuilleProfile) {
    const auto m = mesh();
    const VelocityField f = PoiseuilleVelocity{1.0};
    EXPECT_EQ(eval_velocity(f, m.bulk, {0, 0, 0}), (std::array{0.0, 0.0, 1.0}));
    EXPECT_EQ(eval_velocity(f, m.bulk, {1, 0.3, 0.5}), (std::array{0.0, 0.0, 0.0}));
    EXPECT_DOUBLE_EQ(eval_velocity(f, m.bulk, {0.5, 1, -0.2})[2], 0.75);
}

TEST(EvalVelocity, ZeroEverywhere) {
    const auto m = mesh();
    for (double r : {0.0, 0.4, 1.0}) EXPECT_EQ(eval_velocity(ZeroVelocity{}, m.bulk, {r, 2.0, 0.1}), (std::array{0.0, 0.0, 0.0}));
}

TEST(EvalVelocity, TabulatedUniformInsideCell) {
    const auto m = mesh();
    const VelocityField f = uniform_axial(m.bulk, 0.7);
    const auto v = eval_velocity(f, m.bulk, {0.6, 1.0, 0.3});
    EXPECT_NEAR(v[0], 0.0, 1e-15);
    EXPECT_NEAR(v[1], 0.0, 1e-15);
    EXPECT_NEAR(v[2], 0.7, 1e-14);
}

TEST(ValidateAvel, PoiseuilleIsExactlyDivergenceFree) {
    for (int nr : {1, 3, 8}) {
        const auto m = mesh(nr, 5, 7, 1.3, 0.6);
        const auto rep = validate_avel(PoiseuilleVelocity{2.0}, m.bulk);
        EXPECT_TRUE(rep.passed);
        EXPECT_EQ(rep.max_divergence, 0.0);
        const double q = 2.0 * std::numbers::pi * 1.3 * 1.3 / 2.0;
        EXPECT_NEAR(rep.inflow_rate, q, 1e-12 * q);
        EXPECT_NEAR(rep.outflow_rate, q, 1e-12 * q);
    }
}

TEST(ValidateAvel, ZeroFieldPasses) {
    const auto rep = validate_avel(ZeroVelocity{}, mesh().bulk);
    EXPECT_TRUE(rep.passed);
    EXPECT_EQ(rep.inflow_rate, 0.0);
}

TEST(ValidateAvel, InwardOutletFaceIsReported) {
    const auto m = mesh();
    auto t = uniform_axial(m.bulk, 1.0);
    EXPECT_TRUE(validate_avel(t, m.bulk).passed);
    const int bad = m.bulk.outflow_faces[3];
    t.normal_velocity[bad] = -1.0;
    const auto rep = validate_avel(t, m.bulk);
    EXPECT_FALSE(rep.passed);
    EXPECT_EQ(rep.outflow_violations, std::vector<int>{bad});
    EXPECT_TRUE(rep.inflow_violations.empty());
}

TEST(ValidateAvel, WallLeakAndSourceAreReported) {
    const auto m = mesh();
    auto t = uniform_axial(m.bulk, 1.0);
    t.normal_velocity[m.bulk.lateral_faces[0]] = 0.1;
    const auto rep = validate_avel(t, m.bulk);
    EXPECT_FALSE(rep.passed);
    EXPECT_EQ(rep.lateral_violations, std::vector<int>{m.bulk.lateral_faces[0]});
    EXPECT_EQ(rep.divergence_cells.size(), 1u);
}

TEST(ValidateAvel, TabulatedSizeMismatchThrows) {
    EXPECT_THROW(validate_avel(TabulatedVelocity{{1.0, 2.0}}, mesh().bulk), ConfigError);
}

TEST(FaceFluxes, PoiseuilleInflowEqualsOutflowOnRandomMeshes) {
    for (int n = 1; n <= 6; ++n) {
        const auto m = mesh(n, n + 1, 2 * n, 0.5 * n, 1.0 / n);
        const auto flux = face_fluxes(PoiseuilleVelocity{1.5}, m.bulk);
        double in = 0, out = 0;
        for (int f : m.bulk.inflow_faces) in -= flux[f];
        for (int f : m.bulk.outflow_faces) out += flux[f];
        EXPECT_NEAR(in, out, 1e-14 * std::abs(in));
        for (int f : m.bulk.lateral_faces) EXPECT_EQ(flux[f], 0.0);
    }
}
