#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sublinear/coeffs.hpp"
#include "sublinear/error.hpp"
#include "sublinear/grid.hpp"
#include "sublinear/linalg.hpp"

namespace sublinear {

/// Principal pair of -Delta phi = lambda a phi on B with phi = 0 on dB.
/// phi is extended by zero outside B and normalized to sup norm one.
struct EigenPair {
    double lambda1 = 0.0;
    GridFunction phi;
    Subinterval B;
    std::size_t first_node = 0;  // node at the left end of the snapped B
    std::size_t last_node = 0;   // node at the right end of the snapped B
    int iterations = 0;
    double residual = 0.0;
};

struct EigenOptions {
    double rel_tol = 1e-12;
    int max_iterations = 10000;
};

/// Largest node-aligned subinterval [x_i, x_j] inside B.
inline std::pair<std::size_t, std::size_t> snap_to_nodes(const Mesh& mesh, const Subinterval& B) {
    std::size_t i = mesh.ceil_index(B.lo);
    std::size_t j = mesh.floor_index(B.hi);
    return {i, j};
}

/// Inverse power iteration on the pencil (A_B, diag(a)) where A_B is the
/// discrete -Delta of the mesh restricted to the interior nodes of B.
/// The pencil form never divides by a, so zeros of a inside B are allowed.
inline EigenPair principal_eigenpair(const Weight& a, const Subinterval& B, const Mesh& mesh,
                                     const EigenOptions& opts = {}) {
    auto [lo_node, hi_node] = snap_to_nodes(mesh, B);
    if (hi_node <= lo_node || hi_node - lo_node + 1 < 8) {
        throw Error(ErrorKind::InvalidArgument, "eigen subinterval must contain at least 8 mesh nodes");
    }
    const std::size_t m = hi_node - lo_node - 1;  // interior unknowns

    GridFunction aw = a.on(mesh);
    std::vector<double> w(m);
    int positive_run = 0, best_run = 0;
    for (std::size_t k = 0; k < m; ++k) {
        w[k] = aw[lo_node + 1 + k];
        if (w[k] < 0.0) {
            throw Error(ErrorKind::WeightNotAdmissible, "weight is negative inside the eigen subinterval");
        }
        positive_run = w[k] > 0.0 ? positive_run + 1 : 0;
        best_run = std::max(best_run, positive_run);
    }
    if (best_run < 3) {
        throw Error(ErrorKind::WeightNotAdmissible, "weight must be positive on at least 3 nodes of B");
    }

    // The global Dirichlet operator carries the correct interior rows for
    // both geometries; rows of B's interior are taken as is, with couplings
    // to the endpoints of B dropped.
    TridiagonalOperator full = assemble(mesh, BoundaryCondition::dirichlet());
    std::vector<double> sub(m), dia(m), sup(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t row = lo_node + 1 + k - full.first;
        sub[k] = k == 0 ? 0.0 : full.lower[row];
        dia[k] = full.diag[row];
        sup[k] = k + 1 == m ? 0.0 : full.upper[row];
    }

    std::vector<double> x(m, 1.0), y;
    double lambda = 0.0;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        std::vector<double> dx(m);
        for (std::size_t k = 0; k < m; ++k) dx[k] = w[k] * x[k];
        y = solve_tridiagonal(sub, dia, sup, dx);
        double num = 0.0, den = 0.0, ymax = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            num += x[k] * dx[k];
            den += y[k] * dx[k];
            ymax = std::max(ymax, std::abs(y[k]));
        }
        if (!(den != 0.0) || !(ymax > 0.0)) {
            throw Error(ErrorKind::NoConvergence, "inverse iteration degenerated");
        }
        double next = num / den;
        for (std::size_t k = 0; k < m; ++k) x[k] = y[k] / ymax;
        bool done = it > 0 && std::abs(next - lambda) < opts.rel_tol * std::abs(next);
        lambda = next;
        if (done) break;
    }
    if (it >= opts.max_iterations) throw Error(ErrorKind::NoConvergence, "inverse iteration cap reached");

    // orient positive, then sup-normalize
    double sum = 0.0, xmax = 0.0;
    for (double v : x) sum += v;
    if (sum < 0.0) {
        for (double& v : x) v = -v;
    }
    for (double v : x) xmax = std::max(xmax, v);
    for (double& v : x) v /= xmax;
    if (!(lambda > 0.0)) throw Error(ErrorKind::NoConvergence, "principal eigenvalue not positive");

    EigenPair out{lambda, GridFunction(mesh), {mesh.node(lo_node), mesh.node(hi_node)}, lo_node, hi_node,
                  it + 1, 0.0};
    for (std::size_t k = 0; k < m; ++k) out.phi[lo_node + 1 + k] = x[k];
    for (std::size_t k = 0; k < m; ++k) {
        double r = dia[k] * x[k] - lambda * w[k] * x[k];
        if (k > 0) r += sub[k] * x[k - 1];
        if (k + 1 < m) r += sup[k] * x[k + 1];
        out.residual = std::max(out.residual, std::abs(r));
    }
    return out;
}

/// Largest admissible subsolution amplitude for f(s) = s^q.
inline double eps_max(double q, double lambda1) {
    if (!(lambda1 > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps_max needs lambda1 > 0");
    return std::pow(lambda1, -1.0 / (1.0 - q));
}

}  // namespace sublinear
