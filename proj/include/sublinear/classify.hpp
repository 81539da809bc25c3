#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sublinear/error.hpp"
#include "sublinear/grid.hpp"

namespace sublinear {

enum class VerdictKind { Trivial, InConeD, InConeN, PositiveNotInCone, NonnegativeWithInteriorZeros };

inline std::string to_string(VerdictKind k) {
    switch (k) {
        case VerdictKind::Trivial: return "Trivial";
        case VerdictKind::InConeD: return "InConeD";
        case VerdictKind::InConeN: return "InConeN";
        case VerdictKind::PositiveNotInCone: return "PositiveNotInCone";
        case VerdictKind::NonnegativeWithInteriorZeros: return "NonnegativeWithInteriorZeros";
    }
    return "Unknown";
}

/// All tolerances scale with ||u||_inf except the absolute trivial cutoff.
/// pos:   ||u|| * (pos_rel + pos_h2 * h^2)
/// deriv: ||u|| * deriv_rel
/// core:  ||u|| * core_rel (nodes counted as exactly dead)
struct ClassifyTolerances {
    double pos_rel = 1e-8;
    double pos_h2 = 10.0;
    double deriv_rel = 1e-6;
    double core_rel = 1e-14;
    double trivial = 1e-10;
    std::size_t min_core_nodes = 3;
};

struct PositivityVerdict {
    VerdictKind kind = VerdictKind::Trivial;
    double min_interior = 0.0;
    std::pair<double, double> boundary_derivs{0.0, 0.0};  // d/dx at left and right end
    std::vector<Subinterval> zero_regions;
    std::vector<Subinterval> dead_cores;
    double pos_tol = 0.0;
    double deriv_tol = 0.0;
};

namespace detail {

template <typename Pred>
std::vector<std::pair<std::size_t, std::size_t>> runs(std::size_t lo, std::size_t hi, Pred pred) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = lo;
    while (i <= hi) {
        if (!pred(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 <= hi && pred(j + 1)) ++j;
        out.emplace_back(i, j);
        i = j + 1;
    }
    return out;
}

}  // namespace detail

/// Cone membership from nodal data. Zero regions are maximal node runs with
/// u <= pos_tol. A dead core is a run of at least min_core_nodes interior
/// nodes on which u is zero to rounding (u <= core tol); boundary nodes are
/// never part of a core. For the radial geometry the center is an interior
/// point and only the outer end carries a normal derivative.
inline PositivityVerdict classify(const GridFunction& u, BoundaryCondition bc, const ClassifyTolerances& tol = {}) {
    const Mesh& mesh = u.mesh();
    for (double v : u.vec()) {
        if (v < -1e-12) throw Error(ErrorKind::InvalidArgument, "classify expects a nonnegative function");
    }
    const std::size_t n = static_cast<std::size_t>(mesh.n());
    const bool radial = mesh.geometry().is_radial();
    const double norm = u.max_abs();
    const double h = mesh.h();

    PositivityVerdict v;
    v.pos_tol = norm * (tol.pos_rel + tol.pos_h2 * h * h);
    v.deriv_tol = norm * tol.deriv_rel;
    v.boundary_derivs = boundary_derivatives(u);

    const std::size_t first_interior = radial ? 0 : 1;
    v.min_interior = std::numeric_limits<double>::infinity();
    for (std::size_t i = first_interior; i < n; ++i) v.min_interior = std::min(v.min_interior, u[i]);

    if (norm <= tol.trivial) {
        v.kind = VerdictKind::Trivial;
        return v;
    }

    bool interior_zero = false;
    for (auto [i, j] : detail::runs(0, n, [&](std::size_t k) { return u[k] <= v.pos_tol; })) {
        v.zero_regions.push_back({mesh.node(i), mesh.node(j)});
        bool touches = i == 0 ? !radial : false;
        touches = touches || j == n;
        interior_zero = interior_zero || !touches;
    }
    const double core_tol = norm * tol.core_rel;
    for (auto [i, j] : detail::runs(first_interior, n - 1, [&](std::size_t k) { return u[k] <= core_tol; })) {
        if (j - i + 1 >= tol.min_core_nodes) v.dead_cores.push_back({mesh.node(i), mesh.node(j)});
    }

    if (!v.dead_cores.empty() || interior_zero) {
        v.kind = VerdictKind::NonnegativeWithInteriorZeros;
        return v;
    }
    if (bc.is_dirichlet()) {
        const bool left_ok = radial || v.boundary_derivs.first > v.deriv_tol;
        const bool right_ok = v.boundary_derivs.second < -v.deriv_tol;
        if (v.min_interior > v.pos_tol && left_ok && right_ok) {
            v.kind = VerdictKind::InConeD;
            return v;
        }
    } else if (u.min() > v.pos_tol) {
        v.kind = VerdictKind::InConeN;
        return v;
    }
    v.kind = VerdictKind::PositiveNotInCone;
    return v;
}

inline bool verdict_is_in_cone(const PositivityVerdict& v, BoundaryCondition bc) {
    return bc.is_dirichlet() ? v.kind == VerdictKind::InConeD : v.kind == VerdictKind::InConeN;
}

}  // namespace sublinear
