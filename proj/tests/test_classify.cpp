#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sublinear/classify.hpp"

using namespace sublinear;

namespace {

Mesh pi_mesh(int n) { return build_mesh(Geometry::interval(0.0, kPi), n); }

GridFunction sine(const Mesh& m) { return GridFunction::sample(m, [](double x) { return std::sin(x); }); }

GridFunction pex(const Mesh& m) { return GridFunction::sample(m, [](double x) { return oracle::pex_u(0.5, x); }); }

/// Pex solution extended by zero to (-1, pi + 1).
GridFunction pex_extended(int n) {
    Mesh m = build_mesh(Geometry::interval(-1.0, kPi + 1.0), n);
    return GridFunction::sample(m, [](double x) { return x > 0.0 && x < kPi ? oracle::pex_u(0.5, x) : 0.0; });
}

}  // namespace

TEST(Classify, SineInDirichletCone) {
    PositivityVerdict v = classify(sine(pi_mesh(400)), BoundaryCondition::dirichlet());
    EXPECT_EQ(v.kind, VerdictKind::InConeD);
    EXPECT_NEAR(v.boundary_derivs.first, 1.0, 1e-4);
    EXPECT_NEAR(v.boundary_derivs.second, -1.0, 1e-4);
    EXPECT_TRUE(v.dead_cores.empty());
}

TEST(Classify, PexNotInCone) {
    for (int n : {250, 1000, 2000}) {
        PositivityVerdict v = classify(pex(pi_mesh(n)), BoundaryCondition::dirichlet());
        EXPECT_EQ(v.kind, VerdictKind::PositiveNotInCone) << n;
        EXPECT_TRUE(v.dead_cores.empty());
    }
}

TEST(Classify, ExtendedPexHasTwoDeadCores) {
    const int n = 2000;
    GridFunction u = pex_extended(n);
    PositivityVerdict v = classify(u, BoundaryCondition::dirichlet());
    EXPECT_EQ(v.kind, VerdictKind::NonnegativeWithInteriorZeros);
    ASSERT_EQ(v.dead_cores.size(), 2u);
    const double h = u.mesh().h();
    // cores are clipped to interior nodes; u ~ x^4/4 is below the zero threshold for x < 3e-4
    EXPECT_NEAR(v.dead_cores[0].lo, -1.0 + h, 1e-12);
    EXPECT_LE(v.dead_cores[0].hi, 1e-3);
    EXPECT_GT(v.dead_cores[0].hi, -0.2);
    EXPECT_GE(v.dead_cores[1].lo, kPi - 1e-3);
    EXPECT_LT(v.dead_cores[1].lo, kPi + 0.2);
    EXPECT_NEAR(v.dead_cores[1].hi, kPi + 1.0 - h, 1e-12);
    // every dead core lies inside a zero region
    for (const auto& c : v.dead_cores) {
        bool inside = false;
        for (const auto& z : v.zero_regions) inside = inside || (z.lo <= c.lo && c.hi <= z.hi);
        EXPECT_TRUE(inside);
    }
}

TEST(Classify, TrivialAndNeumann) {
    Mesh m = pi_mesh(100);
    EXPECT_EQ(classify(GridFunction(m), BoundaryCondition::dirichlet()).kind, VerdictKind::Trivial);
    EXPECT_EQ(classify(GridFunction(m, 1e-11), BoundaryCondition::neumann()).kind, VerdictKind::Trivial);
    GridFunction shifted = GridFunction::sample(m, [](double x) { return 2.0 + std::cos(x); });
    EXPECT_EQ(classify(shifted, BoundaryCondition::neumann()).kind, VerdictKind::InConeN);
    EXPECT_EQ(classify(shifted, BoundaryCondition::dirichlet()).kind, VerdictKind::PositiveNotInCone);
    EXPECT_EQ(classify(sine(m), BoundaryCondition::neumann()).kind, VerdictKind::PositiveNotInCone);
}

TEST(Classify, InteriorZeroWithoutCore) {
    // a single interior touch point is a zero region but not a dead core
    Mesh m = pi_mesh(200);
    GridFunction u = GridFunction::sample(m, [](double x) { return std::pow(std::sin(2.0 * x), 2); });
    PositivityVerdict v = classify(u, BoundaryCondition::dirichlet());
    EXPECT_EQ(v.kind, VerdictKind::NonnegativeWithInteriorZeros);
    EXPECT_TRUE(v.dead_cores.empty());
    EXPECT_GE(v.zero_regions.size(), 3u);
}

TEST(Classify, RadialCenterIsInterior) {
    Mesh m = build_mesh(Geometry::radial(3, 1.0), 200);
    GridFunction u = GridFunction::sample(m, [](double r) { return std::cos(0.5 * kPi * r); });
    EXPECT_EQ(classify(u, BoundaryCondition::dirichlet()).kind, VerdictKind::InConeD);
    GridFunction hollow = GridFunction::sample(m, [](double r) { return r < 0.3 ? 0.0 : std::sin(kPi * (r - 0.3) / 0.7); });
    PositivityVerdict v = classify(hollow, BoundaryCondition::dirichlet());
    EXPECT_EQ(v.kind, VerdictKind::NonnegativeWithInteriorZeros);
    ASSERT_EQ(v.dead_cores.size(), 1u);
    EXPECT_EQ(v.dead_cores[0].lo, 0.0);
}

TEST(Classify, RejectsNegative) {
    Mesh m = pi_mesh(50);
    GridFunction u = sine(m);
    u[10] = -1e-6;
    EXPECT_THROW(classify(u, BoundaryCondition::dirichlet()), Error);
}

TEST(ClassifyProperty, ScaleInvariance) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> logc(-3.0, 3.0);
    Mesh m = pi_mesh(1000);
    std::vector<std::pair<GridFunction, BoundaryCondition>> cases = {
        {sine(m), BoundaryCondition::dirichlet()},
        {pex(m), BoundaryCondition::dirichlet()},
        {pex_extended(1000), BoundaryCondition::dirichlet()},
        {GridFunction::sample(m, [](double x) { return 1.5 + std::cos(3 * x); }), BoundaryCondition::neumann()},
        {GridFunction::sample(m, [](double x) { return std::pow(std::sin(x), 2); }), BoundaryCondition::dirichlet()},
    };
    for (const auto& [u, bc] : cases) {
        PositivityVerdict base = classify(u, bc);
        for (int k = 0; k < 40; ++k) {
            double c = std::pow(10.0, logc(rng));
            PositivityVerdict v = classify(c * u, bc);
            EXPECT_EQ(v.kind, base.kind) << "c=" << c;
            EXPECT_EQ(v.dead_cores.size(), base.dead_cores.size());
        }
    }
}

TEST(ClassifyProperty, NeumannCompleteness) {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        Mesh m = pi_mesh(200 + 10 * trial);
        GridFunction u = GridFunction::sample(m, [&](double) { return 0.01 + U(rng); });
        PositivityVerdict v = classify(u, BoundaryCondition::neumann());
        ASSERT_GT(u.min(), v.pos_tol);
        EXPECT_EQ(v.kind, VerdictKind::InConeN);
    }
}

TEST(ClassifyProperty, CoresNeverTouchBoundary) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        Mesh m = pi_mesh(40);
        GridFunction u = GridFunction::sample(m, [&](double) { return U(rng) < 0.5 ? 0.0 : U(rng); });
        u[20] = 1.0;
        PositivityVerdict v = classify(u, BoundaryCondition::dirichlet());
        for (const auto& c : v.dead_cores) {
            EXPECT_GT(c.lo, m.left());
            EXPECT_LT(c.hi, m.right());
        }
    }
}

TEST(VerdictIsInCone, Table) {
    PositivityVerdict v;
    v.kind = VerdictKind::InConeD;
    EXPECT_TRUE(verdict_is_in_cone(v, BoundaryCondition::dirichlet()));
    EXPECT_FALSE(verdict_is_in_cone(v, BoundaryCondition::neumann()));
    v.kind = VerdictKind::InConeN;
    EXPECT_TRUE(verdict_is_in_cone(v, BoundaryCondition::neumann()));
    v.kind = VerdictKind::PositiveNotInCone;
    EXPECT_FALSE(verdict_is_in_cone(v, BoundaryCondition::dirichlet()));
    EXPECT_EQ(to_string(VerdictKind::NonnegativeWithInteriorZeros), "NonnegativeWithInteriorZeros");
}
