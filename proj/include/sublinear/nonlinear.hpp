#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sublinear/coeffs.hpp"
#include "sublinear/eigen.hpp"
#include "sublinear/error.hpp"
#include "sublinear/grid.hpp"
#include "sublinear/linalg.hpp"
#include "sublinear/pool.hpp"

namespace sublinear {

/// -Delta u = a(x) f(u) (or lambda a u^q + u^p) on a mesh with a boundary condition.
struct ProblemSpec {
    Mesh mesh;
    BoundaryCondition bc;
    Weight a;
    Nonlinearity f;
};

/// One accepted iterate of the bracket iteration, handed to
/// SolveOptions::observer.
struct MonotoneStep {
    int stage = 0;
    double delta = 0.0;
    int iteration = 0;
    const GridFunction* previous = nullptr;
    const GridFunction* current = nullptr;
};

struct SolveOptions {
    double newton_tol = 1e-10;
    int max_newton = 200;
    double damping = 0.5;
    double min_step = 1.0 / 1048576.0;  // 2^-20
    double reg_delta0 = 1e-2;
    double reg_ratio = 0.25;
    int reg_stages = 8;
    int bracket_max_iters = 5000;
    double bracket_tol = 1e-12;  // successive-difference stop, relative to 1 + ||sup||
    double derivative_floor = 1e-12;
    std::function<void(const MonotoneStep&)> observer;

    void validate() const {
        if (!(newton_tol > 0.0) || max_newton <= 0 || !(damping > 0.0 && damping < 1.0) ||
            !(min_step > 0.0 && min_step < 1.0) || !(reg_delta0 > 0.0) || !(reg_ratio > 0.0 && reg_ratio < 1.0) ||
            reg_stages <= 0 || bracket_max_iters <= 0 || !(bracket_tol > 0.0) || !(derivative_floor > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "solve options must be positive with ratio in (0,1)");
        }
    }

    std::vector<double> delta_schedule() const {
        std::vector<double> s(static_cast<std::size_t>(reg_stages));
        double d = reg_delta0;
        for (auto& v : s) {
            v = d;
            d *= reg_ratio;
        }
        return s;
    }
};

enum class SolveMethod { Bracket, Newton, RegPath };

inline std::string to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::Bracket: return "bracket";
        case SolveMethod::Newton: return "newton";
        case SolveMethod::RegPath: return "regpath";
    }
    return "unknown";
}

inline constexpr double kTrivialTol = 1e-10;

struct SolutionRecord {
    GridFunction u;
    SolveMethod method = SolveMethod::Newton;
    double residual_inf = 0.0;
    int iterations = 0;
    std::optional<std::pair<GridFunction, GridFunction>> bracket;
    std::string provenance;
    bool trivial = false;
    bool at_roundoff_floor = false;  // accepted on the rounding floor rather than newton_tol
    double min_increment = 0.0;      // bracket iteration: min over steps and nodes of u_{k+1} - u_k
};

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

/// Pointwise right-hand side g(i, s) and its s-derivative.
struct PointwiseRhs {
    std::function<double(std::size_t, double)> value;
    std::function<double(std::size_t, double)> deriv;
};

inline PointwiseRhs problem_rhs(const ProblemSpec& p, const GridFunction& a) {
    return {[&p, &a](std::size_t i, double s) { return p.f.rhs(a[i], s); },
            [&p, &a](std::size_t i, double s) { return p.f.rhs_deriv(a[i], s); }};
}

inline std::vector<double> residual(const TridiagonalOperator& op, const PointwiseRhs& g, const GridFunction& u) {
    std::vector<double> r = op.apply(u);
    for (std::size_t k = 0; k < op.count; ++k) {
        std::size_t i = op.first + k;
        r[k] -= g.value(i, u[i]);
    }
    return r;
}

inline double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Size of the residual that rounding alone produces for this u: the
/// stencil cancels O(1/h^2)-sized terms.
inline double roundoff_floor(const TridiagonalOperator& op, const PointwiseRhs& g, const GridFunction& u) {
    double opnorm = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < op.count; ++k) {
        opnorm = std::max(opnorm, std::abs(op.lower[k]) + std::abs(op.diag[k]) + std::abs(op.upper[k]));
        rhs = std::max(rhs, std::abs(g.value(op.first + k, u[op.first + k])));
    }
    return 16.0 * std::numeric_limits<double>::epsilon() * (opnorm * u.max_abs() + rhs);
}

inline void project(const TridiagonalOperator& op, GridFunction& u) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!op.is_unknown(i)) {
            u[i] = 0.0;
        } else if (u[i] < 0.0) {
            u[i] = 0.0;
        }
    }
}

/// Damped Newton with nonnegativity projection; the Jacobian uses the
/// derivative at max(u, floor) so that powers with f'(0+) = inf stay finite.
inline SolutionRecord newton_core(const TridiagonalOperator& op, const PointwiseRhs& g, GridFunction u,
                                  const SolveOptions& opts, std::string provenance) {
    project(op, u);
    std::vector<double> F = residual(op, g, u);
    double r = inf_norm(F);
    double prev_r = std::numeric_limits<double>::infinity();
    bool stalled = false;
    for (int it = 0;; ++it) {
        const double floor = roundoff_floor(op, g, u);
        // below the rounding floor, stop once Newton no longer halves the residual
        if (r <= opts.newton_tol || (r <= floor && (stalled || r > 0.5 * prev_r))) {
            SolutionRecord rec{u, SolveMethod::Newton, r, it, std::nullopt, std::move(provenance), false, false, 0.0};
            rec.trivial = u.max_abs() <= kTrivialTol;
            rec.at_roundoff_floor = r > opts.newton_tol;
            return rec;
        }
        if (it >= opts.max_newton) {
            throw Error(ErrorKind::NoConvergence, "newton iteration cap reached, residual " + sci(r));
        }
        // Tangent Jacobian, or with chord slopes g(u)/u on small absorbing
        // nodes, where the tangent of s^q overshoots below zero.
        const double unorm = u.max_abs();
        auto direction = [&](bool chord) -> std::optional<std::vector<double>> {
            std::vector<double> extra(op.count), rhs(op.count);
            bool changed = false;
            for (std::size_t k = 0; k < op.count; ++k) {
                std::size_t i = op.first + k;
                extra[k] = -g.deriv(i, std::max(u[i], opts.derivative_floor));
                if (chord && extra[k] > 0.0 && u[i] > 0.0 && u[i] < 1e-4 * unorm) {
                    double c = -g.value(i, u[i]) / u[i];
                    if (c > extra[k]) {
                        extra[k] = c;
                        changed = true;
                    }
                }
                rhs[k] = -F[k];
            }
            if (chord && !changed) return std::nullopt;
            try {
                return solve_shifted(op, extra, std::move(rhs));
            } catch (const Error&) {
                return std::nullopt;
            }
        };
        GridFunction trial = u;
        std::vector<double> Ft;
        const double r_before = r;
        auto search = [&](const std::vector<double>& d, double t, double t_min) {
            for (; t >= t_min; t *= opts.damping) {
                for (std::size_t k = 0; k < op.count; ++k) trial[op.first + k] = u[op.first + k] + t * d[k];
                project(op, trial);
                Ft = residual(op, g, trial);
                double rt = inf_norm(Ft);
                if (std::isfinite(rt) && rt <= (1.0 - 1e-4 * t) * r) {
                    r = rt;
                    return true;
                }
            }
            return false;
        };
        // full tangent step, then damped chord steps, then damped tangent steps
        auto tangent = direction(false);
        bool accepted = tangent && search(*tangent, 1.0, 1.0);
        if (!accepted) {
            auto chord = direction(true);
            accepted = chord && search(*chord, 1.0, opts.min_step);
        }
        if (!accepted) accepted = tangent && search(*tangent, opts.damping, opts.min_step);
        if (!accepted) {
            if (r <= floor) {
                stalled = true;
                continue;
            }
            if (!tangent) throw Error(ErrorKind::NoConvergence, "singular newton jacobian");
            throw Error(ErrorKind::NoConvergence, "newton damping exhausted, residual " + sci(r));
        }
        prev_r = r_before;
        u = trial;
        F = std::move(Ft);
    }
}

}  // namespace detail

/// ||(-Delta) u - a f(u)||_inf over the unknown rows of the boundary condition.
inline double residual_norm(const ProblemSpec& p, const GridFunction& u) {
    TridiagonalOperator op = assemble(p.mesh, p.bc);
    GridFunction a = p.a.on(p.mesh);
    return detail::inf_norm(detail::residual(op, detail::problem_rhs(p, a), u));
}

inline SolutionRecord newton_solve(const ProblemSpec& p, const GridFunction& init, const SolveOptions& opts = {}) {
    opts.validate();
    for (double v : init.vec()) {
        if (v < 0.0) throw Error(ErrorKind::InvalidArgument, "newton init must be nonnegative");
    }
    TridiagonalOperator op = assemble(p.mesh, p.bc);
    GridFunction a = p.a.on(p.mesh);
    return detail::newton_core(op, detail::problem_rhs(p, a), init, opts, "newton");
}

// ---------------------------------------------------------------------------
// sub- and supersolutions

struct SubsolutionCertificate {
    GridFunction u;
    EigenPair eigen;
    double eps = 0.0;
};

namespace detail {

inline double violation_scale(const std::vector<double>& lhs, const std::vector<double>& rhs) {
    return std::max({inf_norm(lhs), inf_norm(rhs), std::numeric_limits<double>::min()});
}

/// Max over unknown rows of (op*w - g(w)) * sign: positive part measures
/// failure of the sub (sign = +1) or super (sign = -1) inequality.
inline double inequality_defect(const TridiagonalOperator& op, const PointwiseRhs& g, const GridFunction& w,
                                double sign, double& scale) {
    std::vector<double> lhs = op.apply(w), rhs(op.count);
    for (std::size_t k = 0; k < op.count; ++k) rhs[k] = g.value(op.first + k, w[op.first + k]);
    scale = violation_scale(lhs, rhs);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < op.count; ++k) worst = std::max(worst, sign * (lhs[k] - rhs[k]));
    return worst;
}

}  // namespace detail

/// Discrete sub-/supersolution checks: op*w <= g(w) resp. >= g(w) on every
/// unknown row within 1e-9 of the larger side's magnitude.
inline bool is_subsolution(const ProblemSpec& p, const GridFunction& w) {
    TridiagonalOperator op = assemble(p.mesh, p.bc);
    GridFunction a = p.a.on(p.mesh);
    double scale = 0.0;
    double defect = detail::inequality_defect(op, detail::problem_rhs(p, a), w, +1.0, scale);
    return defect <= 1e-9 * scale;
}

inline bool is_supersolution(const ProblemSpec& p, const GridFunction& w) {
    TridiagonalOperator op = assemble(p.mesh, p.bc);
    GridFunction a = p.a.on(p.mesh);
    double scale = 0.0;
    double defect = detail::inequality_defect(op, detail::problem_rhs(p, a), w, -1.0, scale);
    return defect <= 1e-9 * scale;
}

/// eps * phi on B (principal eigenfunction of a on B), zero outside.
inline SubsolutionCertificate certify_subsolution(const ProblemSpec& p, const Subinterval& B, double eps) {
    if (!(eps >= 0.0)) throw Error(ErrorKind::InvalidArgument, "subsolution amplitude must be >= 0");
    EigenPair eig = principal_eigenpair(p.a, B, p.mesh);
    GridFunction u = eps * eig.phi;
    if (eps > 0.0 && !is_subsolution(p, u)) {
        throw Error(ErrorKind::NotASubsolution, "eps*phi violates the subsolution inequality (eps too large)");
    }
    return {std::move(u), std::move(eig), eps};
}

inline GridFunction build_subsolution(const ProblemSpec& p, const Subinterval& B, double eps) {
    if (eps == 0.0) return GridFunction(p.mesh);
    return certify_subsolution(p, B, eps).u;
}

/// The longest component of {a > 0}, shrunk by `margin` of its length on
/// each side.
inline Subinterval default_ball(const ProblemSpec& p, double margin = 0.1) {
    WeightSplit s = split(p.a, p.mesh);
    if (s.omega_plus.empty()) throw Error(ErrorKind::WeightNotAdmissible, "weight has no positive part");
    auto best = std::max_element(s.omega_plus.begin(), s.omega_plus.end(),
                                 [](const Subinterval& x, const Subinterval& y) { return x.length() < y.length(); });
    double len = best->length();
    return {best->lo + margin * len, best->hi - margin * len};
}

/// Subsolution on the default ball. For powers (and the concave part of the
/// concave-convex form) the amplitude is 0.9 of the largest admissible one;
/// for other f it is halved from 1 until the discrete inequality holds.
inline SubsolutionCertificate auto_subsolution(const ProblemSpec& p) {
    Subinterval B = default_ball(p);
    EigenPair eig = principal_eigenpair(p.a, B, p.mesh);
    using namespace nonlinearity_form;
    double eps = 1.0;
    if (const auto* pw = std::get_if<Power>(&p.f.form())) {
        eps = 0.9 * eps_max(pw->q, eig.lambda1);
    } else if (const auto* cc = std::get_if<ConcaveConvex>(&p.f.form())) {
        eps = 0.9 * std::pow(cc->lambda / eig.lambda1, 1.0 / (1.0 - cc->q));
    }
    for (int attempt = 0; attempt < 80; ++attempt) {
        GridFunction u = eps * eig.phi;
        if (is_subsolution(p, u)) return {std::move(u), eig, eps};
        eps *= 0.5;
    }
    throw Error(ErrorKind::NotASubsolution, "no admissible subsolution amplitude found");
}

/// k * psi with -Delta psi = a^+, Dirichlet.
inline GridFunction build_supersolution(const ProblemSpec& p, double k) {
    if (!p.bc.is_dirichlet()) throw Error(ErrorKind::InvalidArgument, "supersolution kpsi needs Dirichlet bc");
    if (!(k > 0.0)) throw Error(ErrorKind::InvalidArgument, "supersolution needs k > 0");
    GridFunction psi = solve_linear_special(LinearSpecial::PsiOfAPlus, p.a, p.mesh);
    if (!(psi.max() > 0.0)) throw Error(ErrorKind::NotASupersolution, "a^+ vanishes, psi is identically zero");
    GridFunction w = k * psi;
    if (!is_supersolution(p, w)) throw Error(ErrorKind::NotASupersolution, "k*psi fails the supersolution inequality");
    return w;
}

/// Doubles k from 1 until k * psi is a supersolution.
inline std::pair<GridFunction, double> auto_supersolution(const ProblemSpec& p, double k_max = 1e12) {
    for (double k = 1.0; k <= k_max; k *= 2.0) {
        try {
            return {build_supersolution(p, k), k};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotASupersolution || k * 2.0 > k_max) throw;
            GridFunction psi = solve_linear_special(LinearSpecial::PsiOfAPlus, p.a, p.mesh);
            if (!(psi.max() > 0.0)) throw;
        }
    }
    throw Error(ErrorKind::NotASupersolution, "no admissible k found");
}

// ---------------------------------------------------------------------------
// bracket iteration

namespace detail {

/// sup of difference quotients of s -> F(s+delta) - F(delta) on [0, s0],
/// from consecutive samples and derivative samples.
inline double lipschitz_bound(const Nonlinearity& f, double delta, double s0, int samples = 400) {
    double L = 0.0;
    double prev_s = 0.0, prev_f = f.weighted(delta);
    for (int j = 1; j <= samples; ++j) {
        double s = s0 * static_cast<double>(j) / samples;
        double fs = f.weighted(s + delta);
        L = std::max(L, (fs - prev_f) / (s - prev_s));
        prev_s = s;
        prev_f = fs;
    }
    for (int j = 0; j <= samples; ++j) {
        double d = f.weighted_deriv(s0 * static_cast<double>(j) / samples + delta);
        if (std::isfinite(d)) L = std::max(L, d);
    }
    return L;
}

}  // namespace detail

/// Monotone iteration between an ordered pair sub <= sup.
///
/// Stage delta solves -Delta u = a^+ F(u) - a^- (F(u+delta) - F(delta)) + G(u)
/// by u_{k+1} = (-Delta + M)^{-1} (M u_k + rhs(u_k)) starting from sub, with
/// M = a^- L_delta + a^+ |K_{s0}| [K < 0]. The absorption term is the only one
/// regularized: F(s+delta) - F(delta) <= F(s) for concave F, so sub stays a
/// subsolution and k*psi stays a supersolution at every stage. The stages
/// follow the delta schedule down and the last iterate is Newton-polished
/// on the unregularized problem.
inline SolutionRecord monotone_iterate(const ProblemSpec& p, const GridFunction& sub, const GridFunction& sup,
                                       const SolveOptions& opts = {}) {
    opts.validate();
    if (sub.size() != p.mesh.size() || sup.size() != p.mesh.size()) {
        throw Error(ErrorKind::InvalidArgument, "bracket functions live on a different mesh");
    }
    const double s0 = std::max(sup.max_abs(), 1e-300);
    const double order_tol = 1e-9 * (1.0 + s0);
    for (std::size_t i = 0; i < sub.size(); ++i) {
        if (sub[i] > sup[i] + order_tol) {
            throw Error(ErrorKind::BracketViolated, "sub > sup at node " + std::to_string(i));
        }
    }

    GridFunction a = p.a.on(p.mesh);
    GridFunction aplus(p.mesh), aminus(p.mesh);
    bool has_minus = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        aplus[i] = std::max(a[i], 0.0);
        aminus[i] = std::max(-a[i], 0.0);
        has_minus = has_minus || aminus[i] > 0.0;
    }
    double K = 0.0;
    if (std::holds_alternative<nonlinearity_form::Custom>(p.f.form())) {
        K = p.f.k_meta() ? *p.f.k_meta() : k_constant(p.f, s0);
    }

    std::vector<double> schedule = has_minus ? opts.delta_schedule() : std::vector<double>{0.0};
    GridFunction u = sub;
    int total = 0;
    double min_inc = std::numeric_limits<double>::infinity();
    const double stop = opts.bracket_tol * (1.0 + s0);

    for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
        const double delta = schedule[stage];
        const double L = has_minus ? detail::lipschitz_bound(p.f, delta, s0) : 0.0;
        const double Fdelta = p.f.weighted(delta);
        GridFunction M(p.mesh);
        for (std::size_t i = 0; i < M.size(); ++i) {
            M[i] = aminus[i] * L + aplus[i] * std::max(0.0, -K);
        }
        TridiagonalOperator op = assemble(p.mesh, p.bc, M);
        if (op.pure_neumann()) {
            for (std::size_t i = 0; i < M.size(); ++i) M[i] = 1.0;
            op = assemble(p.mesh, p.bc, M);
        }
        auto rhs_of = [&](const GridFunction& w) {
            GridFunction r(p.mesh);
            for (std::size_t i = 0; i < r.size(); ++i) {
                double s = w[i];
                double absorbed = delta > 0.0 ? p.f.weighted(s + delta) - Fdelta : p.f.weighted(s);
                r[i] = M[i] * s + aplus[i] * p.f.weighted(s) - aminus[i] * absorbed + p.f.unweighted(s);
            }
            return r;
        };

        u = sub;
        bool converged = false;
        for (int it = 1; it <= opts.bracket_max_iters; ++it) {
            GridFunction next = solve(op, rhs_of(u));
            ++total;
            double inc = std::numeric_limits<double>::infinity(), diff = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                double d = next[i] - u[i];
                inc = std::min(inc, d);
                diff = std::max(diff, std::abs(d));
                if (next[i] > sup[i] + order_tol) {
                    throw Error(ErrorKind::BracketViolated,
                                "iterate exceeds sup at node " + std::to_string(i) + " (stage " +
                                    std::to_string(stage) + ")");
                }
            }
            if (inc < -order_tol) {
                throw Error(ErrorKind::BracketViolated,
                            "iterates decreased by " + detail::sci(-inc) + " (stage " + std::to_string(stage) + ")");
            }
            min_inc = std::min(min_inc, inc);
            if (opts.observer) {
                opts.observer(MonotoneStep{static_cast<int>(stage), delta, it, &u, &next});
            }
            u = std::move(next);
            if (diff < stop) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw Error(ErrorKind::NoConvergence, "bracket iteration cap reached at delta " + detail::sci(delta));
        }
    }

    TridiagonalOperator lap = assemble(p.mesh, p.bc);
    SolutionRecord rec = detail::newton_core(lap, detail::problem_rhs(p, a), u, opts, "bracket");
    rec.method = SolveMethod::Bracket;
    rec.iterations = total + rec.iterations;
    rec.bracket = std::make_pair(sub, sup);
    rec.min_increment = min_inc;
    return rec;
}

// ---------------------------------------------------------------------------
// regularization path

/// Exponents linking the problem at q to the limit problem at q0 < q.
struct RegularizedTransform {
    double q0 = 0.0;
    double q = 0.5;
    double beta = 1.0;
    double gamma = 0.0;
    double epsilon = 1.0;

    static RegularizedTransform make(double q0, double q, double epsilon = 1.0) {
        if (!(q0 >= 0.0 && q0 < q && q < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "transform needs 0 <= q0 < q < 1");
        }
        if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "transform needs epsilon > 0");
        return {q0, q, (1.0 - q) / (1.0 - q0), (q - q0) / (1.0 - q), epsilon};
    }

    /// q < 1/(2 - q0), equivalently q0 + gamma < 1.
    bool in_admissible_range() const { return q < 1.0 / (2.0 - q0); }
};

struct PathStage {
    double epsilon = 0.0;
    double residual = 0.0;
    double norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct RegularizationPath {
    SolutionRecord limit;  // w-hat_0, a nonnegative solution of -Delta w = beta a w^q0
    std::vector<PathStage> stages;
    bool complete = false;
};

namespace detail {

/// Right side of the shifted auxiliary problem in w-hat = w - eps^beta.
inline PointwiseRhs auxiliary_rhs(const GridFunction& a, const RegularizedTransform& t, double eps) {
    if (eps == 0.0) {
        return {[&a, t](std::size_t i, double s) { return t.beta * a[i] * std::pow(s, t.q0); },
                [&a, t](std::size_t i, double s) { return t.beta * a[i] * t.q0 * std::pow(s, t.q0 - 1.0); }};
    }
    const double e = std::pow(eps, t.beta);
    // (s + e)^(1/beta) - eps without cancellation for s << e
    auto unshift = [t, e, eps](double s) { return eps * std::expm1(std::log1p(s / e) / t.beta); };
    auto value = [&a, t, e, unshift](std::size_t i, double s) {
        double w = s + e;
        double x = std::max(unshift(s), 0.0);
        return t.beta * a[i] * std::pow(w, -t.gamma) * std::pow(x, t.q);
    };
    auto deriv = [&a, t, e, unshift](std::size_t i, double s) {
        double w = s + e;
        double x = std::max(unshift(s), std::numeric_limits<double>::min());
        double dx = std::pow(w, 1.0 / t.beta - 1.0) / t.beta;
        double term = -t.gamma * std::pow(w, -t.gamma - 1.0) * std::pow(x, t.q) +
                      std::pow(w, -t.gamma) * t.q * std::pow(x, t.q - 1.0) * dx;
        return t.beta * a[i] * term;
    };
    return {value, deriv};
}

}  // namespace detail

/// Follows the auxiliary problems down a decreasing epsilon schedule, each
/// seeded at the supersolution (u_seed + eps)^beta, then solves the limit
/// problem -Delta w = beta a w^q0 from the last stage. All functions are
/// returned in shifted form w - eps^beta (zero Dirichlet data).
inline RegularizationPath regularization_path(const ProblemSpec& p, const RegularizedTransform& t,
                                              const GridFunction& u_seed, const SolveOptions& opts = {}) {
    opts.validate();
    if (!p.bc.is_dirichlet()) throw Error(ErrorKind::InvalidArgument, "regularization path is a Dirichlet device");
    if (!t.in_admissible_range()) throw Error(ErrorKind::InvalidArgument, "need q0 < q < 1/(2-q0)");
    for (double v : u_seed.vec()) {
        if (v < 0.0) throw Error(ErrorKind::InvalidArgument, "seed must be nonnegative");
    }
    TridiagonalOperator op = assemble(p.mesh, p.bc);
    GridFunction a = p.a.on(p.mesh);

    RegularizationPath path;
    GridFunction last = u_seed;
    for (std::size_t i = 0; i < last.size(); ++i) last[i] = std::pow(u_seed[i], t.beta);
    bool all_ok = true;
    for (double eps : opts.delta_schedule()) {
        const double e = std::pow(eps, t.beta);
        GridFunction seed(p.mesh);
        for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = std::max(std::pow(u_seed[i] + eps, t.beta) - e, 0.0);
        detail::PointwiseRhs g = detail::auxiliary_rhs(a, t, eps);
        try {
            SolutionRecord rec = detail::newton_core(op, g, seed, opts, "auxiliary");
            path.stages.push_back({eps, rec.residual_inf, rec.u.max_abs(), rec.iterations, true});
            last = rec.u;
        } catch (const Error& e2) {
            if (e2.kind() != ErrorKind::NoConvergence) throw;
            path.stages.push_back({eps, std::numeric_limits<double>::quiet_NaN(), 0.0, 0, false});
            all_ok = false;
        }
    }
    detail::PointwiseRhs g0 = detail::auxiliary_rhs(a, t, 0.0);
    SolutionRecord rec = detail::newton_core(op, g0, last, opts, "limit");
    rec.method = SolveMethod::RegPath;
    path.stages.push_back({0.0, rec.residual_inf, rec.u.max_abs(), rec.iterations, true});
    path.limit = std::move(rec);
    path.complete = all_ok;
    return path;
}

/// Residual of -Delta w = beta a w^q0 (the limit problem).
inline double limit_residual(const ProblemSpec& p, const RegularizedTransform& t, const GridFunction& w) {
    TridiagonalOperator op = assemble(p.mesh, p.bc);
    GridFunction a = p.a.on(p.mesh);
    return detail::inf_norm(detail::residual(op, detail::auxiliary_rhs(a, t, 0.0), w));
}

/// delta1 * phi on a ball B inside {a > 0} where u_seed > 0, with
/// delta1 = min(min_B(u)^beta / 4, (c0 beta / lambda1)^(1/(1-q0-gamma))),
/// c0 = 2^-gamma. It is a subsolution of the limit problem below u_seed^beta.
inline GridFunction limit_subsolution(const ProblemSpec& p, const RegularizedTransform& t, const GridFunction& u_seed) {
    Subinterval B = default_ball(p);
    EigenPair eig = principal_eigenpair(p.a, B, p.mesh);
    double umin = std::numeric_limits<double>::infinity();
    for (std::size_t i = eig.first_node; i <= eig.last_node; ++i) umin = std::min(umin, u_seed[i]);
    if (!(umin > 0.0)) throw Error(ErrorKind::InvalidArgument, "seed must be positive on the closed ball");
    const double c0 = std::pow(2.0, -t.gamma);
    const double by_order = 0.25 * std::pow(umin, t.beta);
    const double by_equation = std::pow(c0 * t.beta / eig.lambda1, 1.0 / (1.0 - t.q0 - t.gamma));
    return std::min(by_order, by_equation) * eig.phi;
}

// ---------------------------------------------------------------------------
// multistart

namespace detail {

/// Uniform double in [0,1) from the top 53 bits; portable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double bump(const Mesh& mesh, BoundaryCondition bc, double x) {
    double t = (x - mesh.left()) / mesh.geometry().length();
    double core = mesh.geometry().is_radial() ? std::cos(0.5 * kPi * t) : std::sin(kPi * t);
    return bc.is_dirichlet() ? core : 0.5 * (1.0 + core);
}

}  // namespace detail

inline double dedup_tolerance(const GridFunction& u) { return 1e-6 * (1.0 + u.max_abs()); }

/// Newton from the zero function, the automatic subsolution, the automatic
/// supersolution and n_starts - 3 random bumps with log-uniform amplitude in
/// [1e-3, 1e2]. Starts that fail to build or converge are dropped; the
/// distinct solutions come back sorted by sup norm.
inline std::vector<SolutionRecord> multistart_solve(const ProblemSpec& p, int n_starts, std::uint64_t seed,
                                                    const SolveOptions& opts = {}, int jobs = 1) {
    if (n_starts < 1) throw Error(ErrorKind::InvalidArgument, "multistart needs n_starts >= 1");
    opts.validate();

    struct Start {
        std::optional<GridFunction> init;
        std::string label;
    };
    std::vector<Start> starts;
    starts.push_back({GridFunction(p.mesh), "zero"});
    if (n_starts >= 2) {
        try {
            starts.push_back({auto_subsolution(p).u, "subsolution"});
        } catch (const Error&) {
            starts.push_back({std::nullopt, "subsolution"});
        }
    }
    if (n_starts >= 3) {
        try {
            starts.push_back({auto_supersolution(p).first, "supersolution"});
        } catch (const Error&) {
            starts.push_back({std::nullopt, "supersolution"});
        }
    }
    std::mt19937_64 rng(seed);
    for (int k = 3; k < n_starts; ++k) {
        double amp = std::pow(10.0, -3.0 + 5.0 * detail::unit_uniform(rng));
        GridFunction g = GridFunction::sample(p.mesh, [&](double x) { return amp * detail::bump(p.mesh, p.bc, x); });
        starts.push_back({std::move(g), "random " + std::to_string(k - 2)});
    }

    std::vector<std::optional<SolutionRecord>> results(starts.size());
    parallel_for(starts.size(), jobs, [&](std::size_t k) {
        if (!starts[k].init) return;
        try {
            SolutionRecord rec = newton_solve(p, *starts[k].init, opts);
            rec.provenance = "newton from " + starts[k].label;
            results[k] = std::move(rec);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoConvergence) throw;
        }
    });

    std::vector<SolutionRecord> found;
    for (auto& r : results) {
        if (r) found.push_back(std::move(*r));
    }
    std::stable_sort(found.begin(), found.end(),
                     [](const SolutionRecord& x, const SolutionRecord& y) { return x.u.max_abs() < y.u.max_abs(); });
    std::vector<SolutionRecord> distinct;
    for (auto& rec : found) {
        bool dup = std::any_of(distinct.begin(), distinct.end(), [&](const SolutionRecord& d) {
            return sup_distance(d.u, rec.u) <= dedup_tolerance(rec.u);
        });
        if (!dup) distinct.push_back(std::move(rec));
    }
    return distinct;
}

}  // namespace sublinear
