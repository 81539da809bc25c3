#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "sublinear/coeffs.hpp"
#include "sublinear/error.hpp"
#include "sublinear/grid.hpp"

namespace sublinear {

/// Discrete -Laplacian + M(x) on the unknown nodes first..first+count-1.
///
/// Row k (node i = first + k) reads
///   lower[k] * u[i-1] + diag[k] * u[i] + upper[k] * u[i+1].
/// Couplings to eliminated Dirichlet nodes are kept in lower/upper so that
/// `apply` works on full grid functions; `solve` treats those nodes as zero.
struct TridiagonalOperator {
    Mesh mesh;
    BoundaryCondition bc;
    GridFunction shift;
    std::size_t first = 0;
    std::size_t count = 0;
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    std::size_t last() const { return first + count - 1; }
    bool is_unknown(std::size_t node) const { return node >= first && node <= last(); }

    /// Row results op*u, one per unknown.
    std::vector<double> apply(const GridFunction& u) const {
        std::vector<double> out(count);
        for (std::size_t k = 0; k < count; ++k) {
            std::size_t i = first + k;
            double v = diag[k] * u[i];
            if (i > 0) v += lower[k] * u[i - 1];
            if (i + 1 < u.size()) v += upper[k] * u[i + 1];
            out[k] = v;
        }
        return out;
    }

    bool shift_is_zero() const {
        return std::all_of(shift.vec().begin(), shift.vec().end(), [](double m) { return m == 0.0; });
    }

    bool pure_neumann() const { return bc.kind == BoundaryKind::Neumann && shift_is_zero(); }

    /// Nonpositive off-diagonals and weak diagonal dominance on every row.
    bool is_m_matrix() const {
        for (std::size_t k = 0; k < count; ++k) {
            if (lower[k] > 0.0 || upper[k] > 0.0 || diag[k] <= 0.0) return false;
            if (diag[k] + 1e-12 * diag[k] < std::abs(lower[k]) + std::abs(upper[k])) return false;
        }
        return true;
    }
};

/// Banded Gaussian elimination with partial pivoting (the LAPACK gtsv
/// scheme). Without row swaps, which is the case for every M-matrix, this
/// is the Thomas algorithm. `sub[k]` couples row k to unknown k-1.
inline std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> d,
                                             std::vector<double> sup, std::vector<double> b) {
    const std::size_t n = d.size();
    if (n == 0) return b;
    // dl[i] couples row i+1 to unknown i, du[i] couples row i to i+1.
    std::vector<double> dl(n > 1 ? n - 1 : 0), du(n > 1 ? n - 1 : 0), du2(n > 2 ? n - 2 : 0, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dl[i] = sub[i + 1];
        du[i] = sup[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) throw Error(ErrorKind::SingularOperator, "zero pivot in tridiagonal solve");
            double fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            double fact = d[i] / dl[i];
            d[i] = dl[i];
            double temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= fact * b[i];
        }
    }
    if (d[n - 1] == 0.0) throw Error(ErrorKind::SingularOperator, "zero pivot in tridiagonal solve");
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t ii = n; ii-- > 2;) {
        std::size_t i = ii - 2;
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    for (double v : b) {
        if (!std::isfinite(v)) throw Error(ErrorKind::SingularOperator, "non-finite tridiagonal solution");
    }
    return b;
}

/// Assembles -Delta + M with the centered three-point stencil. Neumann ends
/// use ghost-node elimination; the radial operator uses the flux form
/// -(rho^(N-1) u')' / rho^(N-1) with the symmetry limit -N u''(0) at the center.
inline TridiagonalOperator assemble(const Mesh& mesh, BoundaryCondition bc, const GridFunction& shift) {
    if (shift.size() != mesh.size()) throw Error(ErrorKind::InvalidArgument, "shift has wrong length");
    for (double m : shift.vec()) {
        if (m < 0.0) throw Error(ErrorKind::InvalidArgument, "shift must be nonnegative");
    }
    const std::size_t n = static_cast<std::size_t>(mesh.n());
    const double h = mesh.h();
    const double ih2 = 1.0 / (h * h);
    const bool radial = mesh.geometry().is_radial();
    const int dim = mesh.geometry().dimension;

    TridiagonalOperator op{mesh, bc, shift, 0, 0, {}, {}, {}};
    const bool left_fixed = !radial && bc.is_dirichlet();
    const bool right_fixed = bc.is_dirichlet();
    op.first = left_fixed ? 1 : 0;
    std::size_t last = right_fixed ? n - 1 : n;
    op.count = last - op.first + 1;
    op.lower.assign(op.count, 0.0);
    op.diag.assign(op.count, 0.0);
    op.upper.assign(op.count, 0.0);

    // Flux weight rho^(N-1) at a node-relative position (in units of h).
    auto area = [&](double index) { return std::pow(index * h, dim - 1); };

    for (std::size_t k = 0; k < op.count; ++k) {
        const std::size_t i = op.first + k;
        double lo = 0.0, di = 0.0, up = 0.0;
        if (!radial || dim == 1) {
            if (i == 0) {
                di = 2.0 * ih2;
                up = -2.0 * ih2;
            } else if (i == n) {
                di = 2.0 * ih2;
                lo = -2.0 * ih2;
            } else {
                lo = -ih2;
                di = 2.0 * ih2;
                up = -ih2;
            }
        } else if (i == 0) {
            di = 2.0 * dim * ih2;
            up = -2.0 * dim * ih2;
        } else {
            const double x = static_cast<double>(i);
            const double wc = area(x);
            const double wm = area(x - 0.5) / wc;
            const double wp = area(x + 0.5) / wc;
            if (i == n) {
                // ghost u[n+1] = u[n-1]
                lo = -(wm + wp) * ih2;
                di = (wm + wp) * ih2;
            } else {
                lo = -wm * ih2;
                di = (wm + wp) * ih2;
                up = -wp * ih2;
            }
        }
        op.lower[k] = lo;
        op.diag[k] = di + shift[i];
        op.upper[k] = up;
    }
    return op;
}

inline TridiagonalOperator assemble(const Mesh& mesh, BoundaryCondition bc) {
    return assemble(mesh, bc, GridFunction(mesh));
}

/// Left null vector y of a singular pure-Neumann operator (y^T op = 0),
/// normalized so y[0] = 1. It is the exact discrete compatibility weight.
inline std::vector<double> neumann_compatibility_weights(const TridiagonalOperator& op) {
    const std::size_t c = op.count;
    std::vector<double> y(c, 0.0);
    y[0] = 1.0;
    // column j: y[j-1]*upper[j-1] + y[j]*diag[j] + y[j+1]*lower[j+1] = 0
    for (std::size_t j = 0; j + 1 < c; ++j) {
        double s = y[j] * op.diag[j];
        if (j > 0) s += y[j - 1] * op.upper[j - 1];
        y[j + 1] = -s / op.lower[j + 1];
    }
    return y;
}

namespace detail {

inline std::vector<double> interior_coupling(const TridiagonalOperator& op, std::vector<double>& sub,
                                             std::vector<double>& sup) {
    sub = op.lower;
    sup = op.upper;
    sub[0] = 0.0;
    sup[op.count - 1] = 0.0;
    return op.diag;
}

}  // namespace detail

/// Solves op*u = rhs on the unknown nodes, with u = 0 on eliminated
/// Dirichlet nodes. The pure Neumann problem is solvable only for
/// compatible rhs; its solution is returned with zero weighted mean.
inline GridFunction solve(const TridiagonalOperator& op, const GridFunction& rhs) {
    if (rhs.size() != op.mesh.size()) throw Error(ErrorKind::InvalidArgument, "rhs has wrong length");
    std::vector<double> sub, sup;
    std::vector<double> d = detail::interior_coupling(op, sub, sup);
    std::vector<double> b(op.count);
    for (std::size_t k = 0; k < op.count; ++k) b[k] = rhs[op.first + k];

    GridFunction u(op.mesh);
    if (op.pure_neumann()) {
        std::vector<double> y = neumann_compatibility_weights(op);
        double dot = 0.0, scale = 0.0, ysum = 0.0;
        for (std::size_t k = 0; k < op.count; ++k) {
            dot += y[k] * b[k];
            scale += std::abs(y[k] * b[k]);
            ysum += y[k];
        }
        if (std::abs(dot) > 1e-9 * std::max(scale, std::numeric_limits<double>::min())) {
            throw Error(ErrorKind::SingularOperator,
                        "pure Neumann rhs violates the compatibility condition");
        }
        // pin the last node to zero and drop its row
        const std::size_t m = op.count - 1;
        sub.resize(m);
        d.resize(m);
        sup.resize(m);
        sup[m - 1] = 0.0;
        b.resize(m);
        std::vector<double> x = solve_tridiagonal(sub, d, sup, b);
        double mean = 0.0;
        for (std::size_t k = 0; k < m; ++k) mean += y[k] * x[k];
        mean /= ysum;
        for (std::size_t k = 0; k < m; ++k) u[op.first + k] = x[k] - mean;
        u[op.first + m] = -mean;
        return u;
    }
    std::vector<double> x = solve_tridiagonal(std::move(sub), std::move(d), std::move(sup), std::move(b));
    for (std::size_t k = 0; k < op.count; ++k) u[op.first + k] = x[k];
    return u;
}

/// Solves (op + diag(extra)) x = b on the unknowns (vectors of length count).
inline std::vector<double> solve_shifted(const TridiagonalOperator& op, std::span<const double> extra,
                                         std::vector<double> b) {
    std::vector<double> sub, sup;
    std::vector<double> d = detail::interior_coupling(op, sub, sup);
    for (std::size_t k = 0; k < op.count; ++k) d[k] += extra[k];
    return solve_tridiagonal(std::move(sub), std::move(d), std::move(sup), std::move(b));
}

enum class LinearSpecial { PhiOfA, PsiOfAPlus };

/// PhiOfA: -Delta phi = a with phi = 0 on the boundary.
/// PsiOfAPlus: -Delta psi = a^+ with psi = 0 on the boundary.
inline GridFunction solve_linear_special(LinearSpecial kind, const Weight& a, const Mesh& mesh) {
    GridFunction rhs = a.on(mesh);
    if (kind == LinearSpecial::PsiOfAPlus) {
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = std::max(rhs[i], 0.0);
    }
    return solve(assemble(mesh, BoundaryCondition::dirichlet()), rhs);
}

}  // namespace sublinear
