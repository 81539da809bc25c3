#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sublinear/eigen.hpp"

using namespace sublinear;

namespace {

Mesh pi_mesh(int n) { return build_mesh(Geometry::interval(0.0, kPi), n); }

/// Dense oracle for the same discrete pencil restricted to the snapped B.
double dense_lambda1(const Weight& a, const Mesh& m, std::size_t lo, std::size_t hi) {
    const int intervals = static_cast<int>(hi - lo);
    std::vector<double> w;
    for (std::size_t i = lo + 1; i < hi; ++i) w.push_back(a(m.node(i)));
    return oracle::smallest_generalized_eigenvalue(oracle::dirichlet_laplacian(intervals, m.h()), w);
}

}  // namespace

TEST(Eigen, UnitWeightOnPi) {
    Mesh m = pi_mesh(2000);
    EigenPair e = principal_eigenpair(Weight::constant(1.0), {0.0, kPi}, m);
    EXPECT_NEAR(e.lambda1, 1.0, 1e-6);
    // discrete eigenvalue of the three-point stencil, closed form
    const double h = m.h();
    EXPECT_NEAR(e.lambda1, 4.0 / (h * h) * std::pow(std::sin(h / 2.0), 2), 1e-11);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(e.phi[i], std::sin(m.node(i)), 1e-6);
}

TEST(Eigen, PhiInvariants) {
    Mesh m = pi_mesh(600);
    Weight a = Weight::pex(0.5);
    EigenPair e = principal_eigenpair(a, {kPi / 3 + 0.05, 2 * kPi / 3 - 0.05}, m);
    EXPECT_NEAR(e.phi.max(), 1.0, 1e-12);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > e.first_node && i < e.last_node) {
            EXPECT_GT(e.phi[i], 0.0);
        } else {
            EXPECT_EQ(e.phi[i], 0.0);
        }
    }
    GridFunction av = a.on(m);
    EXPECT_LE(e.residual, 1e-8 * e.lambda1 * av.max_abs());
}

TEST(Eigen, PexAgainstDenseEigensolver) {
    Mesh m = pi_mesh(500);  // about 130 nodes inside B
    Weight a = Weight::pex(0.5);
    EigenPair e = principal_eigenpair(a, {kPi / 3 + 0.05, 2 * kPi / 3 - 0.05}, m);
    EXPECT_GT(e.lambda1, 0.0);
    ASSERT_LE(e.last_node - e.first_node, 200u);
    double ref = dense_lambda1(a, m, e.first_node, e.last_node);
    EXPECT_NEAR(e.lambda1, ref, 1e-9 * ref);
}

TEST(Eigen, WeightWithZerosAgainstDense) {
    // pex_plus vanishes on part of B; the pencil is semidefinite there
    Mesh m = pi_mesh(300);
    Weight a = Weight::closed_form("pex_plus", {0.5});
    EigenPair e = principal_eigenpair(a, {0.8, 2.4}, m);
    double ref = dense_lambda1(a, m, e.first_node, e.last_node);
    EXPECT_NEAR(e.lambda1, ref, 1e-9 * ref);
}

TEST(Eigen, ScalingLaw) {
    Mesh m = pi_mesh(1000);
    double base = principal_eigenpair(Weight::constant(1.0), {0.0, kPi}, m).lambda1;
    for (double c : {0.5, 2.0, 10.0}) {
        double lc = principal_eigenpair(Weight::constant(1.0).scaled(c), {0.0, kPi}, m).lambda1;
        EXPECT_NEAR(lc * c / base, 1.0, 1e-10) << c;
    }
    Weight pex = Weight::pex(0.5);
    Subinterval B{1.2, 1.9};
    double pb = principal_eigenpair(pex, B, m).lambda1;
    for (double c : {0.5, 2.0, 10.0}) {
        EXPECT_NEAR(principal_eigenpair(pex.scaled(c), B, m).lambda1 * c / pb, 1.0, 1e-10);
    }
}

TEST(Eigen, DomainMonotonicity) {
    Mesh m = pi_mesh(1200);
    double prev = 0.0;
    for (double shrink : {0.0, 0.1, 0.3, 0.6, 1.0}) {
        double l = principal_eigenpair(Weight::constant(1.0), {shrink, kPi - shrink}, m).lambda1;
        EXPECT_GT(l, prev);
        prev = l;
    }
}

TEST(Eigen, Errors) {
    Mesh m = pi_mesh(200);
    auto kind_of = [&](const Weight& a, Subinterval B) {
        try {
            principal_eigenpair(a, B, m);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::ConfigError;
    };
    EXPECT_EQ(kind_of(Weight::pex(0.5), {0.2, 2.9}), ErrorKind::WeightNotAdmissible);
    EXPECT_EQ(kind_of(Weight::constant(0.0), {0.2, 2.9}), ErrorKind::WeightNotAdmissible);
    EXPECT_EQ(kind_of(Weight::constant(1.0), {1.0, 1.05}), ErrorKind::InvalidArgument);
}

TEST(EpsMax, Examples) {
    EXPECT_DOUBLE_EQ(eps_max(0.5, 0.5), 4.0);
    EXPECT_DOUBLE_EQ(eps_max(0.3, 1.0), 1.0);
    EXPECT_NEAR(eps_max(0.75, 1.0 / 16.0), 65536.0, 1e-9);
    EXPECT_THROW(eps_max(0.5, 0.0), Error);
}
