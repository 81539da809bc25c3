#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sublinear/grid.hpp"

using namespace sublinear;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Mesh interval_mesh(double l, double r, int n) { return build_mesh(Geometry::interval(l, r), n); }

}  // namespace

TEST(Mesh, RejectsTooFewIntervals) {
    EXPECT_THROW(interval_mesh(0.0, kPi, 4), Error);
    EXPECT_THROW(interval_mesh(0.0, kPi, 7), Error);
}

TEST(Mesh, EightIntervalsOnPi) {
    Mesh m = interval_mesh(0.0, kPi, 8);
    EXPECT_EQ(m.size(), 9u);
    EXPECT_DOUBLE_EQ(m.h(), kPi / 8);
    for (std::size_t i = 0; i <= 8; ++i) EXPECT_NEAR(m.node(i), kPi * static_cast<double>(i) / 8, 4 * kEps);
    EXPECT_EQ(m.node(0), 0.0);
    EXPECT_EQ(m.node(8), kPi);
}

TEST(Mesh, RadialNodes) {
    Mesh m = build_mesh(Geometry::radial(3, 1.0), 10);
    EXPECT_TRUE(m.geometry().is_radial());
    EXPECT_EQ(m.left(), 0.0);
    for (std::size_t i = 0; i <= 10; ++i) EXPECT_NEAR(m.node(i), 0.1 * static_cast<double>(i), 4 * kEps);
}

TEST(Geometry, InvalidInputs) {
    EXPECT_THROW(Geometry::interval(1.0, 1.0), Error);
    EXPECT_THROW(Geometry::interval(2.0, 1.0), Error);
    EXPECT_THROW(Geometry::radial(0, 1.0), Error);
    EXPECT_THROW(Geometry::radial(2, -1.0), Error);
}

TEST(MeshProperty, MonotoneAndEquispaced) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-50.0, 50.0), len(1e-3, 100.0);
    std::uniform_int_distribution<int> nd(8, 5000);
    for (int trial = 0; trial < 200; ++trial) {
        double l = pos(rng), L = len(rng);
        int n = nd(rng);
        Mesh m = interval_mesh(l, l + L, n);
        EXPECT_NEAR(m.h() * n, m.right() - m.left(), 8 * kEps * std::max(1.0, std::abs(m.right() - m.left())));
        for (std::size_t i = 1; i < m.size(); ++i) ASSERT_GT(m.node(i), m.node(i - 1));
    }
}

TEST(GridFunction, RejectsNonFiniteAndWrongLength) {
    Mesh m = interval_mesh(0.0, 1.0, 8);
    EXPECT_THROW(GridFunction(m, std::vector<double>(5, 0.0)), Error);
    std::vector<double> v(9, 0.0);
    v[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(GridFunction(m, v), Error);
}

TEST(BoundaryDerivatives, ExactOnLinear) {
    for (int n : {8, 13, 100, 1001}) {
        Mesh m = interval_mesh(0.0, 1.0, n);
        auto [l, r] = boundary_derivatives(GridFunction::sample(m, [](double x) { return x; }));
        EXPECT_NEAR(l, 1.0, 8 * kEps * n);
        EXPECT_NEAR(r, 1.0, 8 * kEps * n);
    }
}

TEST(BoundaryDerivatives, AffineProperty) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> c(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        double s = c(rng), b = c(rng), l = c(rng);
        Mesh m = interval_mesh(l, l + 2.0, 16 + trial);
        auto [dl, dr] = boundary_derivatives(GridFunction::sample(m, [&](double x) { return s * x + b; }));
        // one-sided stencils divide O(|u|) differences by h, so compare with a conditioning-aware bound
        double bound = 64 * kEps * (std::abs(s) * 12.0 + std::abs(b)) / m.h();
        EXPECT_NEAR(dl, s, bound);
        EXPECT_NEAR(dr, s, bound);
    }
}

TEST(BoundaryDerivatives, Sine) {
    Mesh m = interval_mesh(0.0, kPi, 1000);
    auto [l, r] = boundary_derivatives(GridFunction::sample(m, [](double x) { return std::sin(x); }));
    EXPECT_NEAR(l, 1.0, 1e-5);
    EXPECT_NEAR(r, -1.0, 1e-5);
}

TEST(BoundaryDerivatives, PexSolutionIsFlat) {
    Mesh m = interval_mesh(0.0, kPi, 1000);
    auto [l, r] = boundary_derivatives(GridFunction::sample(m, [](double x) { return oracle::pex_u(0.5, x); }));
    EXPECT_NEAR(l, 0.0, 1e-6);
    EXPECT_NEAR(r, 0.0, 1e-6);
}

TEST(Integrate, Constant) {
    Mesh m = interval_mesh(0.0, kPi, 100);
    EXPECT_NEAR(integrate(GridFunction::sample(m, [](double) { return 1.0; })), kPi, 1e-12);
    Mesh odd = interval_mesh(0.0, kPi, 101);
    EXPECT_NEAR(integrate(GridFunction::sample(odd, [](double) { return 1.0; })), kPi, 16 * kEps * kPi);
}

TEST(Integrate, Sine) {
    Mesh m = interval_mesh(0.0, kPi, 100);
    EXPECT_NEAR(integrate(GridFunction::sample(m, [](double x) { return std::sin(x); })), 2.0, 1e-7);
}

TEST(Integrate, PexWeight) {
    Mesh m = interval_mesh(0.0, kPi, 1000);
    EXPECT_NEAR(integrate(GridFunction::sample(m, [](double x) { return oracle::pex_a(0.5, x); })), -2.0 * kPi,
                1e-6);
}

TEST(Integrate, ObservedOrder) {
    auto err = [](int n) {
        Mesh m = interval_mesh(0.0, 1.0, n);
        return std::abs(integrate(GridFunction::sample(m, [](double x) { return std::exp(x); })) - (std::exp(1.0) - 1));
    };
    // Simpson on even n, trapezoid on odd n
    double simpson = std::log2(err(20) / err(40));
    double trap = std::log2(err(21) / err(43)) * std::log(2.0) / std::log(43.0 / 21.0);
    EXPECT_GE(simpson, 3.8);
    EXPECT_LE(simpson, 4.1);
    EXPECT_GE(trap, 1.9);
    EXPECT_LE(trap, 2.1);
}

TEST(Integrate, RadialMeasure) {
    // integral of 1 against rho^2 d rho on (0, 1) is 1/3
    Mesh m = build_mesh(Geometry::radial(3, 1.0), 100);
    EXPECT_NEAR(integrate_measure(GridFunction::sample(m, [](double) { return 1.0; })), 1.0 / 3.0, 1e-12);
}

TEST(Norms, LrAndH1) {
    Mesh m = interval_mesh(0.0, kPi, 2000);
    GridFunction s = GridFunction::sample(m, [](double x) { return std::sin(x); });
    EXPECT_NEAR(lr_norm(s, 2.0), std::sqrt(kPi / 2), 1e-10);
    EXPECT_NEAR(h1_seminorm(s), std::sqrt(kPi / 2), 1e-6);
    EXPECT_THROW(lr_norm(s, 0.5), Error);
}
