#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sublinear/classify.hpp"
#include "sublinear/coeffs.hpp"
#include "sublinear/eigen.hpp"
#include "sublinear/grid.hpp"
#include "sublinear/lab/config.hpp"
#include "sublinear/lab/output.hpp"
#include "sublinear/nonlinear.hpp"
#include "sublinear/pool.hpp"

namespace sublinear::lab {

inline constexpr const char* kVersion = "0.1.0";

struct RowStatus {
    std::string status = "ok";
    std::string message;
};

struct ExperimentResult {
    std::string experiment;
    Table table;
    std::vector<RowStatus> rows;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> warnings;
    long long violations = 0;
    bool hard_failure = false;
    PlotSpec plot;

    int exit_code() const { return hard_failure ? 3 : violations > 0 ? 1 : 0; }
};

struct RunOptions {
    std::uint64_t seed = 0;
    int jobs = 1;
};

// ---------------------------------------------------------------------------
// shared config readers

inline RunOptions read_run(const Config& c) {
    RunOptions r;
    const auto seed = c.raw("run", "seed");
    if (seed) {
        std::size_t used = 0;
        try {
            r.seed = std::stoull(*seed, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != seed->size() || seed->front() == '-') {
            throw config_error("run.seed: expected an unsigned 64-bit integer");
        }
    }
    r.jobs = static_cast<int>(c.integer("run", "jobs", default_jobs()));
    if (r.jobs < 1) throw config_error("run.jobs must be >= 1");
    return r;
}

inline SolveOptions read_solver(const Config& c) {
    SolveOptions o;
    o.newton_tol = c.real("solver", "newton_tol", o.newton_tol);
    o.max_newton = static_cast<int>(c.integer("solver", "max_newton", o.max_newton));
    o.reg_delta0 = c.real("solver", "reg_delta0", o.reg_delta0);
    o.reg_ratio = c.real("solver", "reg_ratio", o.reg_ratio);
    o.reg_stages = static_cast<int>(c.integer("solver", "reg_stages", o.reg_stages));
    o.bracket_max_iters = static_cast<int>(c.integer("solver", "bracket_max_iters", o.bracket_max_iters));
    o.bracket_tol = c.real("solver", "bracket_tol", o.bracket_tol);
    try {
        o.validate();
    } catch (const Error& e) {
        throw config_error(std::string("[solver] ") + e.what());
    }
    return o;
}

inline int read_starts(const Config& c, int fallback) {
    long long s = c.integer("solver", "starts", fallback);
    if (s < 1 || s > 10000) throw config_error("solver.starts must be in [1, 10000]");
    return static_cast<int>(s);
}

inline Mesh read_mesh(const Config& c, int default_n = 400) {
    const std::string geom = c.choice("problem", "geometry", "interval", {"interval", "radial"});
    Geometry g;
    if (geom == "interval") {
        g = Geometry::interval(c.real("problem", "left", 0.0), c.real("problem", "right", kPi));
    } else {
        g = Geometry::radial(static_cast<int>(c.integer("problem", "dimension", 3)), c.real("problem", "radius", 1.0));
    }
    long long n = c.integer("problem", "n", default_n);
    if (n < Mesh::kMinIntervals || n > 10000000) throw config_error("problem.n must be in [8, 1e7]");
    return Mesh(g, static_cast<int>(n));
}

inline BoundaryCondition read_bc(const Config& c, const std::string& fallback = "dirichlet") {
    return c.choice("problem", "bc", fallback, {"dirichlet", "neumann"}) == "dirichlet"
               ? BoundaryCondition::dirichlet()
               : BoundaryCondition::neumann();
}

inline double read_unit_exponent(const Config& c, const std::string& section, const std::string& key, double fallback) {
    double q = c.real(section, key, fallback);
    if (!(q > 0.0 && q < 1.0)) throw config_error(Config::qualified(section, key) + " must be in (0,1)");
    return q;
}

// ---------------------------------------------------------------------------
// solution census shared by the sweeps

struct Census {
    long long solutions = 0;
    long long nontrivial = 0;
    long long in_cone = 0;
    long long positive = 0;  // nontrivial without interior zeros
    double max_norm = 0.0;
    double min_nontrivial_norm = std::numeric_limits<double>::quiet_NaN();
    double max_residual = 0.0;
    std::string verdicts;
    std::vector<std::pair<double, VerdictKind>> positive_branches;  // (norm, kind), ascending norm

    bool all_in_cone() const { return in_cone == nontrivial; }
};

inline Census take_census(const ProblemSpec& p, const std::vector<SolutionRecord>& sols) {
    Census c;
    c.solutions = static_cast<long long>(sols.size());
    for (const auto& s : sols) {
        c.max_residual = std::max(c.max_residual, s.residual_inf);
        PositivityVerdict v = classify(s.u, p.bc);
        if (v.kind == VerdictKind::Trivial) continue;
        const double norm = s.u.max_abs();
        ++c.nontrivial;
        c.max_norm = std::max(c.max_norm, norm);
        if (std::isnan(c.min_nontrivial_norm)) c.min_nontrivial_norm = norm;
        if (verdict_is_in_cone(v, p.bc)) ++c.in_cone;
        if (v.kind != VerdictKind::NonnegativeWithInteriorZeros) {
            ++c.positive;
            c.positive_branches.emplace_back(norm, v.kind);
        }
        c.verdicts += (c.verdicts.empty() ? "" : ";") + to_string(v.kind);
    }
    return c;
}

inline std::vector<Cell> census_cells(const Census& c) {
    return {c.solutions,
            c.nontrivial,
            c.in_cone,
            c.all_in_cone(),
            c.nontrivial ? Cell(c.min_nontrivial_norm) : Cell(),
            c.max_norm,
            c.max_residual,
            c.verdicts};
}

inline const std::vector<std::string>& census_columns() {
    static const std::vector<std::string> cols = {"solutions",   "nontrivial",          "in_cone",
                                                  "all_in_cone", "min_nontrivial_norm", "max_norm",
                                                  "max_residual", "verdicts"};
    return cols;
}

/// Fills rows in parallel. `key(i)` gives the leading cells of row i (its
/// parameters), `body(i)` the remaining ones; a library error in `body`
/// turns the row into a failure row with empty cells.
inline void fill_rows(ExperimentResult& out, std::size_t count, int jobs,
                      const std::function<std::vector<Cell>(std::size_t)>& key,
                      const std::function<std::vector<Cell>(std::size_t)>& body) {
    std::vector<std::vector<Cell>> cells(count);
    std::vector<RowStatus> status(count);
    parallel_for(count, jobs, [&](std::size_t i) {
        std::vector<Cell> row = key(i);
        try {
            std::vector<Cell> rest = body(i);
            row.insert(row.end(), rest.begin(), rest.end());
        } catch (const Error& e) {
            status[i] = {"failed", e.what()};
        }
        cells[i] = std::move(row);
    });
    const std::size_t width = out.table.columns.size();
    for (std::size_t i = 0; i < count; ++i) {
        auto& row = cells[i];
        row.resize(width - 1);
        row.push_back(status[i].status);
        out.table.add(std::move(row));
        out.rows.push_back(status[i]);
        if (status[i].status != "ok") out.hard_failure = true;
    }
}

inline std::vector<std::string> with_status(std::vector<std::string> cols) {
    cols.push_back("status");
    return cols;
}

inline bool row_ok(const ExperimentResult& r, std::size_t i) { return r.rows[i].status == "ok"; }

template <typename T>
T cell_as(const ExperimentResult& r, std::size_t row, const std::string& col) {
    return std::get<T>(r.table.rows[row][r.table.column(col)]);
}

/// Bisection on a monotone predicate between lo (false) and hi (true).
inline std::pair<double, double> bisect(double lo, double hi, double width,
                                        const std::function<bool(double, int)>& pred) {
    int step = 0;
    while (std::abs(hi - lo) > width && step < 60) {
        double mid = 0.5 * (lo + hi);
        if (pred(mid, step)) hi = mid;
        else lo = mid;
        ++step;
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// verify-pex

struct VerifyPexSettings {
    double q = 0.5;
    std::vector<int> n_list;
    SolveOptions solver;
};

inline VerifyPexSettings parse_verify_pex(const Config& c) {
    VerifyPexSettings s;
    s.q = read_unit_exponent(c, "verify-pex", "q", 0.5);
    for (double v : c.grid("verify-pex", "n_list", {250, 500, 1000, 2000})) {
        if (v != std::floor(v) || v < Mesh::kMinIntervals) throw config_error("verify-pex.n_list needs integers >= 8");
        s.n_list.push_back(static_cast<int>(v));
    }
    if (!std::is_sorted(s.n_list.begin(), s.n_list.end())) throw config_error("verify-pex.n_list must increase");
    s.solver = read_solver(c);
    return s;
}

/// Observed order of a quantity e(n) ~ n^-p between consecutive meshes.
inline double observed_order(double e_coarse, double e_fine, int n_coarse, int n_fine) {
    return std::log(e_coarse / e_fine) / std::log(static_cast<double>(n_fine) / n_coarse);
}

inline ExperimentResult run_verify_pex(const VerifyPexSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "verify-pex";
    out.table.columns = with_status({"n", "h", "exact_residual", "residual_ratio", "residual_order",
                                     "polished_residual", "newton_iterations", "error_inf", "error_order", "verdict",
                                     "left_derivative", "right_derivative"});
    const PexPair pair = pex_pair(s.q);
    fill_rows(
        out, s.n_list.size(), run.jobs,
        [&](std::size_t i) { return std::vector<Cell>{static_cast<long long>(s.n_list[i])}; },
        [&](std::size_t i) {
            Mesh mesh(Geometry::interval(0.0, kPi), s.n_list[i]);
            ProblemSpec p{mesh, BoundaryCondition::dirichlet(), pair.weight, Nonlinearity::power(s.q)};
            GridFunction exact = GridFunction::sample(mesh, pair.exact_u);
            const double res = residual_norm(p, exact);
            SolutionRecord rec = newton_solve(p, exact, s.solver);
            PositivityVerdict v = classify(rec.u, p.bc);
            return std::vector<Cell>{mesh.h(), res, Cell(), Cell(), rec.residual_inf,
                                     static_cast<long long>(rec.iterations), sup_distance(rec.u, exact), Cell(),
                                     to_string(v.kind), v.boundary_derivs.first, v.boundary_derivs.second};
        });

    const double lo = std::log2(3.6), hi = std::log2(4.4);
    for (std::size_t i = 1; i < s.n_list.size(); ++i) {
        if (!row_ok(out, i) || !row_ok(out, i - 1)) continue;
        auto& row = out.table.rows[i];
        const double r0 = cell_as<double>(out, i - 1, "exact_residual"), r1 = cell_as<double>(out, i, "exact_residual");
        const double e0 = cell_as<double>(out, i - 1, "error_inf"), e1 = cell_as<double>(out, i, "error_inf");
        const double order = observed_order(r0, r1, s.n_list[i - 1], s.n_list[i]);
        row[out.table.column("residual_ratio")] = r0 / r1;
        row[out.table.column("residual_order")] = order;
        row[out.table.column("error_order")] = observed_order(e0, e1, s.n_list[i - 1], s.n_list[i]);
        if (!(order >= lo && order <= hi)) {
            ++out.violations;
            out.warnings.push_back("residual order " + format_real(order) + " at n=" + std::to_string(s.n_list[i]) +
                                   " outside [log2 3.6, log2 4.4]");
        }
    }
    const std::size_t last = s.n_list.size() - 1;
    if (row_ok(out, last)) {
        const std::string verdict = cell_as<std::string>(out, last, "verdict");
        out.summary["finest_verdict"] = verdict;
        // for large r, sin^r / r underflows the dead-core threshold on the first
        // interior nodes and the discrete verdict cannot be PositiveNotInCone
        Mesh mesh(Geometry::interval(0.0, kPi), s.n_list[last]);
        const ClassifyTolerances tol;
        const double exact_max = GridFunction::sample(mesh, pair.exact_u).max_abs();
        const bool resolvable = pair.exact_u(mesh.node(tol.min_core_nodes)) > exact_max * tol.core_rel;
        out.summary["verdict_resolvable"] = resolvable;
        if (resolvable && verdict != to_string(VerdictKind::PositiveNotInCone)) {
            ++out.violations;
            out.warnings.push_back("finest mesh verdict is " + verdict + ", expected PositiveNotInCone");
        } else if (!resolvable && verdict == to_string(VerdictKind::InConeD)) {
            ++out.violations;
            out.warnings.push_back("finest mesh verdict is InConeD for a flat exact solution");
        } else if (!resolvable) {
            out.warnings.push_back("exact solution underflows the dead-core threshold next to the boundary; verdict " +
                                   verdict + " accepted");
        }
    }
    out.summary["q"] = s.q;
    out.summary["r"] = pair.r;
    out.plot = {"n", {"exact_residual", "error_inf"}, true, true, "pex pair: residual and error vs n"};
    return out;
}

// ---------------------------------------------------------------------------
// sweep-q

struct SweepQSettings {
    Mesh mesh;
    BoundaryCondition bc;
    Weight weight = Weight::constant(1.0);
    std::string weight_text;
    std::vector<double> q_grid;
    bool refine = true;
    double refine_width = 1e-3;
    int starts = 20;
    SolveOptions solver;
};

inline SweepQSettings parse_sweep_q(const Config& c) {
    SweepQSettings s;
    s.mesh = read_mesh(c);
    s.bc = read_bc(c);
    s.weight_text = c.text("problem", "weight", "pex(0.5)");
    s.weight = parse_weight(s.weight_text);
    s.q_grid = c.grid("sweep-q", "q_grid", {0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95});
    for (double q : s.q_grid) {
        if (!(q > 0.0 && q < 1.0)) throw config_error("sweep-q.q_grid values must lie in (0,1)");
    }
    s.refine = c.boolean("sweep-q", "refine", true);
    s.refine_width = c.real("sweep-q", "refine_width", 1e-3);
    if (!(s.refine_width > 0.0)) throw config_error("sweep-q.refine_width must be positive");
    s.starts = read_starts(c, 20);
    s.solver = read_solver(c);
    return s;
}

/// Interval-structure analysis of a boolean pattern over an increasing
/// parameter: the expected shape is false...false true...true.
struct PatternReport {
    std::string pattern;
    long long violations = 0;  // false entries after the first true
    std::optional<std::size_t> first_true_of_suffix;
    std::optional<std::size_t> last_false;
};

inline PatternReport analyze_pattern(const std::vector<std::optional<bool>>& flags) {
    PatternReport r;
    bool seen_true = false;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (!flags[i]) {
            r.pattern += '?';
            continue;
        }
        r.pattern += *flags[i] ? 'T' : 'F';
        if (*flags[i]) {
            seen_true = true;
        } else {
            if (seen_true) ++r.violations;
            r.last_false = i;
        }
    }
    for (std::size_t i = flags.size(); i-- > 0;) {
        if (!flags[i]) continue;
        if (!*flags[i]) break;
        r.first_true_of_suffix = i;
    }
    return r;
}

inline ExperimentResult run_sweep_q(const SweepQSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "sweep-q";
    std::vector<std::string> cols = {"q"};
    for (const auto& c : census_columns()) cols.push_back(c);
    out.table.columns = with_status(cols);

    auto census_at = [&](double q, std::uint64_t seed) {
        ProblemSpec p{s.mesh, s.bc, s.weight, Nonlinearity::power(q)};
        return take_census(p, multistart_solve(p, s.starts, seed, s.solver));
    };
    fill_rows(
        out, s.q_grid.size(), run.jobs, [&](std::size_t i) { return std::vector<Cell>{s.q_grid[i]}; },
        [&](std::size_t i) { return census_cells(census_at(s.q_grid[i], run.seed ^ i)); });

    if (!split(s.weight, s.mesh).changes_sign) {
        out.warnings.push_back("weight does not change sign; every q is expected in the cone");
    }

    // analyze in increasing q
    std::vector<std::size_t> order(s.q_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.q_grid[a] < s.q_grid[b]; });
    std::vector<std::optional<bool>> flags;
    for (std::size_t i : order) {
        flags.push_back(row_ok(out, i) ? std::optional<bool>(cell_as<bool>(out, i, "all_in_cone")) : std::nullopt);
    }
    PatternReport pat = analyze_pattern(flags);
    out.summary["pattern"] = pat.pattern;
    out.summary["pattern_violations"] = pat.violations;
    if (pat.violations > 0) {
        out.warnings.push_back("all-in-cone pattern is not an interval in q (" + pat.pattern +
                               "); the multistart search may have missed solutions");
    }
    nlohmann::json qhat = nullptr;
    if (pat.violations == 0 && pat.first_true_of_suffix && pat.last_false) {
        double lo = s.q_grid[order[*pat.last_false]], hi = s.q_grid[order[*pat.first_true_of_suffix]];
        qhat = {{"bracket", {lo, hi}}};
        if (s.refine) {
            const std::uint64_t base = s.q_grid.size();
            auto [rlo, rhi] = bisect(lo, hi, s.refine_width, [&](double q, int step) {
                return census_at(q, run.seed ^ (base + static_cast<std::uint64_t>(step))).all_in_cone();
            });
            qhat["refined_bracket"] = {rlo, rhi};
            lo = rlo;
            hi = rhi;
        }
        qhat["estimate"] = 0.5 * (lo + hi);
    }
    out.summary["q_hat"] = qhat;
    out.plot = {"q", {"in_cone", "nontrivial"}, false, false, "solutions in the cone vs q"};
    return out;
}

// ---------------------------------------------------------------------------
// sweep-negative-part

struct SweepMuSettings {
    Mesh mesh;
    BoundaryCondition bc;
    Weight aplus = Weight::constant(1.0);
    Weight aminus = Weight::constant(1.0);
    double q = 0.5;
    std::vector<double> mu_grid;
    double lr_exponent = 3.0;
    bool refine = false;
    double refine_width = 1e-3;
    int starts = 20;
    SolveOptions solver;
};

inline SweepMuSettings parse_sweep_mu(const Config& c) {
    SweepMuSettings s;
    s.mesh = read_mesh(c);
    s.bc = read_bc(c);
    s.aplus = parse_weight(c.text("sweep-negative-part", "aplus", "pex_plus(0.5)"));
    s.aminus = parse_weight(c.text("sweep-negative-part", "aminus", "pex_minus(0.5)"));
    s.q = read_unit_exponent(c, "sweep-negative-part", "q", 0.5);
    s.mu_grid = c.grid("sweep-negative-part", "mu_grid", {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
    for (double m : s.mu_grid) {
        if (m < 0.0) throw config_error("sweep-negative-part.mu_grid must be nonnegative");
    }
    const int dim = s.mesh.geometry().is_radial() ? s.mesh.geometry().dimension : 1;
    s.lr_exponent = c.real("sweep-negative-part", "lr_exponent", 2.0 * dim + 1.0);
    if (!(s.lr_exponent > dim)) throw config_error("sweep-negative-part.lr_exponent must exceed the dimension");
    s.refine = c.boolean("sweep-negative-part", "refine", false);
    s.refine_width = c.real("sweep-negative-part", "refine_width", 1e-3);
    if (!(s.refine_width > 0.0)) throw config_error("sweep-negative-part.refine_width must be positive");
    s.starts = read_starts(c, 20);
    s.solver = read_solver(c);

    GridFunction ap = s.aplus.on(s.mesh), am = s.aminus.on(s.mesh);
    if (ap.min() < 0.0 || am.min() < 0.0) throw config_error("aplus and aminus must be nonnegative on the mesh");
    if (!(ap.max() > 0.0) || !(am.max() > 0.0)) throw config_error("aplus and aminus must both be nontrivial");
    return s;
}

inline ExperimentResult run_sweep_mu(const SweepMuSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "sweep-negative-part";
    std::vector<std::string> cols = {"mu", "aminus_lr_norm"};
    for (const auto& c : census_columns()) cols.push_back(c);
    out.table.columns = with_status(cols);

    const double am_norm = lr_norm(s.aminus.on(s.mesh), s.lr_exponent);
    auto census_at = [&](double mu, std::uint64_t seed) {
        ProblemSpec p{s.mesh, s.bc, Weight::combination(s.aplus, s.aminus, mu), Nonlinearity::power(s.q)};
        return take_census(p, multistart_solve(p, s.starts, seed, s.solver));
    };
    fill_rows(
        out, s.mu_grid.size(), run.jobs,
        [&](std::size_t i) { return std::vector<Cell>{s.mu_grid[i], s.mu_grid[i] * am_norm}; },
        [&](std::size_t i) { return census_cells(census_at(s.mu_grid[i], run.seed ^ i)); });

    std::vector<std::size_t> order(s.mu_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.mu_grid[a] < s.mu_grid[b]; });

    // mu_star: largest grid value with every smaller grid value all-in-cone
    std::optional<std::size_t> star, first_fail;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t i = order[k];
        if (!row_ok(out, i)) break;
        if (!cell_as<bool>(out, i, "all_in_cone")) {
            first_fail = i;
            break;
        }
        star = i;
    }
    std::vector<std::optional<bool>> flags;
    for (std::size_t i : order) {
        // reversed sense: in cone should hold on a prefix in mu
        flags.push_back(row_ok(out, i) ? std::optional<bool>(!cell_as<bool>(out, i, "all_in_cone")) : std::nullopt);
    }
    PatternReport pat = analyze_pattern(flags);
    out.summary["pattern_violations"] = pat.violations;
    if (pat.violations > 0) out.warnings.push_back("in-cone set is not an initial segment of the mu grid");

    out.summary["mu_star"] = star ? nlohmann::json(s.mu_grid[*star]) : nlohmann::json(nullptr);
    if (star && first_fail) {
        double lo = s.mu_grid[*star], hi = s.mu_grid[*first_fail];
        nlohmann::json muhat = {{"bracket", {lo, hi}}};
        if (s.refine) {
            const std::uint64_t base = s.mu_grid.size();
            // predicate "fails the cone", monotone increasing in mu
            auto [rlo, rhi] = bisect(lo, hi, s.refine_width, [&](double mu, int step) {
                return !census_at(mu, run.seed ^ (base + static_cast<std::uint64_t>(step))).all_in_cone();
            });
            muhat["refined_bracket"] = {rlo, rhi};
            lo = rlo;
            hi = rhi;
        }
        muhat["estimate"] = 0.5 * (lo + hi);
        out.summary["mu_hat"] = muhat;
    } else {
        out.summary["mu_hat"] = nullptr;
    }
    const std::size_t top = order.back();
    if (row_ok(out, top)) out.summary["all_in_cone_at_max_mu"] = cell_as<bool>(out, top, "all_in_cone");
    out.summary["lr_exponent"] = s.lr_exponent;
    out.plot = {"mu", {"in_cone", "nontrivial"}, false, false, "solutions in the cone vs mu"};
    return out;
}

// ---------------------------------------------------------------------------
// neumann-law

inline const std::vector<std::string>& default_neumann_catalog() {
    static const std::vector<std::string> c = {
        "sine(3, 1/pi)",       // integral 1 + 2/3 > 0
        "cosine(1)",           // integral 0
        "sine(3, -2/(3*pi))",  // integral 0
        "pex(0.5)",            // integral -2 pi
        "constant(-1)",
        "cosine(2, -0.2)",
        "constant(1)",
        "cosine(2, 0.3)",
    };
    return c;
}

struct NeumannSettings {
    Mesh mesh;
    std::vector<std::string> weight_texts;
    std::vector<Weight> weights;
    double q = 0.5;
    int starts = 20;
    SolveOptions solver;
};

inline NeumannSettings parse_neumann(const Config& c) {
    NeumannSettings s;
    s.mesh = read_mesh(c);
    if (read_bc(c, "neumann").is_dirichlet()) throw config_error("neumann-law requires problem.bc = neumann");
    s.weight_texts = c.list("neumann-law", "weights", default_neumann_catalog());
    for (const auto& w : s.weight_texts) s.weights.push_back(parse_weight(w));
    s.q = read_unit_exponent(c, "neumann-law", "q", 0.5);
    s.starts = read_starts(c, 20);
    s.solver = read_solver(c);
    return s;
}

inline ExperimentResult run_neumann(const NeumannSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "neumann-law";
    out.table.columns = with_status({"weight", "integral", "solutions", "nontrivial", "positive", "in_cone_n",
                                     "max_norm", "max_residual", "violation"});
    fill_rows(
        out, s.weights.size(), run.jobs,
        [&](std::size_t i) {
            return std::vector<Cell>{s.weight_texts[i], integrate_measure(s.weights[i].on(s.mesh))};
        },
        [&](std::size_t i) {
            ProblemSpec p{s.mesh, BoundaryCondition::neumann(), s.weights[i], Nonlinearity::power(s.q)};
            auto sols = multistart_solve(p, s.starts, run.seed ^ i, s.solver);
            long long nontrivial = 0, positive = 0, cone = 0;
            double max_norm = 0.0, max_res = 0.0;
            for (const auto& rec : sols) {
                max_res = std::max(max_res, rec.residual_inf);
                PositivityVerdict v = classify(rec.u, p.bc);
                if (v.kind == VerdictKind::Trivial) continue;
                ++nontrivial;
                max_norm = std::max(max_norm, rec.u.max_abs());
                if (v.kind == VerdictKind::InConeN) ++cone;
                if (v.kind == VerdictKind::InConeN || v.min_interior > v.pos_tol) ++positive;
            }
            const double integral = integrate_measure(s.weights[i].on(s.mesh));
            const bool violation = positive > 0 && !(integral < 0.0);
            return std::vector<Cell>{static_cast<long long>(sols.size()), nontrivial, positive, cone, max_norm,
                                     max_res, violation};
        });
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
        if (row_ok(out, i) && cell_as<bool>(out, i, "violation")) {
            ++out.violations;
            out.warnings.push_back("positive solution found for weight " + s.weight_texts[i] +
                                   " whose integral is not negative");
        }
    }
    out.summary["violations"] = out.violations;
    out.summary["q"] = s.q;
    out.plot = {"integral", {"positive"}, false, false, "positive Neumann solutions vs integral of a"};
    return out;
}

// ---------------------------------------------------------------------------
// ta-recursion

inline double ta_sigma(double q) { return 0.1 * (q - 1.0) * (q - 1.0) / (2.0 - q); }

/// q_0, ..., q_steps with q_{n+1} = 1/(2 - q_n) - sigma_n.
inline std::vector<double> ta_sequence(double q0, int steps) {
    if (!(q0 >= 0.0 && q0 < 1.0)) throw Error(ErrorKind::InvalidArgument, "q0 must lie in [0,1)");
    if (steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be >= 1");
    std::vector<double> q{q0};
    for (int n = 0; n < steps; ++n) q.push_back(1.0 / (2.0 - q.back()) - ta_sigma(q.back()));
    return q;
}

struct TaSettings {
    double q0 = 0.0;
    int steps = 200;
};

inline TaSettings parse_ta(const Config& c) {
    TaSettings s;
    s.q0 = c.real("ta-recursion", "q0", 0.0);
    if (!(s.q0 >= 0.0 && s.q0 < 1.0)) throw config_error("ta-recursion.q0 must lie in [0,1)");
    long long steps = c.integer("ta-recursion", "steps", 200);
    if (steps < 1 || steps > 10000000) throw config_error("ta-recursion.steps must be in [1, 1e7]");
    s.steps = static_cast<int>(steps);
    return s;
}

inline ExperimentResult run_ta(const TaSettings& s, const RunOptions&) {
    ExperimentResult out;
    out.experiment = "ta-recursion";
    out.table.columns = with_status({"n", "q_n", "sigma_n", "gap", "increment"});
    const std::vector<double> q = ta_sequence(s.q0, s.steps);
    for (std::size_t n = 0; n < q.size(); ++n) {
        RowStatus st;
        Cell inc;
        if (n > 0) {
            inc = q[n] - q[n - 1];
            if (q[n - 1] < 1.0 && !(q[n] > q[n - 1])) st = {"violation", "sequence not strictly increasing"};
        }
        if (q[n] > 1.0) st = {"violation", "q_n exceeds 1"};
        if (st.status != "ok") {
            ++out.violations;
            out.warnings.push_back("step " + std::to_string(n) + ": " + st.message);
        }
        out.table.add({static_cast<long long>(n), q[n], ta_sigma(q[n]), 1.0 - q[n], inc, st.status});
        out.rows.push_back(st);
    }
    out.summary["q1"] = q[1];
    out.summary["final_gap"] = 1.0 - q.back();
    out.summary["steps"] = s.steps;
    out.plot = {"n", {"gap"}, true, true, "1 - q_n"};
    return out;
}

// ---------------------------------------------------------------------------
// concave-convex

struct ConcaveConvexSettings {
    Mesh mesh;
    BoundaryCondition bc;
    Weight weight = Weight::constant(1.0);
    double q = 0.5;
    double p = 3.0;
    std::vector<double> lambda_grid;
    bool check = true;
    int starts = 24;
    SolveOptions solver;
};

inline ConcaveConvexSettings parse_cc(const Config& c) {
    ConcaveConvexSettings s;
    s.mesh = read_mesh(c);
    s.bc = read_bc(c);
    s.weight = parse_weight(c.text("problem", "weight", "constant(1)"));
    s.q = read_unit_exponent(c, "concave-convex", "q", 0.5);
    s.p = c.real("concave-convex", "p", 3.0);
    if (!(s.p > 1.0)) throw config_error("concave-convex.p must exceed 1");
    s.lambda_grid = c.grid("concave-convex", "lambda_grid", {0.2, 0.1, 0.05, 0.025});
    for (double l : s.lambda_grid) {
        if (!(l > 0.0)) throw config_error("concave-convex.lambda_grid must be positive");
    }
    s.check = c.boolean("concave-convex", "check", true);
    s.starts = read_starts(c, 24);
    s.solver = read_solver(c);
    return s;
}

inline ExperimentResult run_cc(const ConcaveConvexSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "concave-convex";
    out.table.columns = with_status({"lambda", "solutions", "positive", "min_branch_norm", "second_branch_norm",
                                     "min_branch_verdict", "second_branch_verdict", "two_positive", "max_residual"});
    fill_rows(
        out, s.lambda_grid.size(), run.jobs, [&](std::size_t i) { return std::vector<Cell>{s.lambda_grid[i]}; },
        [&](std::size_t i) {
            ProblemSpec p{s.mesh, s.bc, s.weight, Nonlinearity::concave_convex(s.lambda_grid[i], s.q, s.p)};
            Census c = take_census(p, multistart_solve(p, s.starts, run.seed ^ i, s.solver));
            const auto& br = c.positive_branches;
            std::vector<Cell> row{c.solutions, c.positive};
            row.push_back(br.size() > 0 ? Cell(br[0].first) : Cell());
            row.push_back(br.size() > 1 ? Cell(br[1].first) : Cell());
            row.push_back(br.size() > 0 ? Cell(to_string(br[0].second)) : Cell());
            row.push_back(br.size() > 1 ? Cell(to_string(br[1].second)) : Cell());
            row.push_back(br.size() >= 2);
            row.push_back(c.max_residual);
            return row;
        });

    // along decreasing lambda
    std::vector<std::size_t> order(s.lambda_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.lambda_grid[a] > s.lambda_grid[b]; });
    bool decreasing = true;
    std::optional<double> prev;
    std::vector<double> two_range;
    double second_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
        if (!row_ok(out, i)) continue;
        const Cell& m = out.table.rows[i][out.table.column("min_branch_norm")];
        if (const double* v = std::get_if<double>(&m)) {
            if (prev && !(*v < *prev)) decreasing = false;
            prev = *v;
        }
        if (cell_as<bool>(out, i, "two_positive")) {
            two_range.push_back(s.lambda_grid[i]);
            second_min = std::min(second_min, cell_as<double>(out, i, "second_branch_norm"));
        }
    }
    out.summary["min_branch_decreasing"] = decreasing;
    out.summary["two_positive_lambdas"] = two_range;
    out.summary["second_branch_norm_lower_bound"] =
        std::isfinite(second_min) ? nlohmann::json(second_min) : nlohmann::json(nullptr);
    if (s.check) {
        if (!decreasing) {
            ++out.violations;
            out.warnings.push_back("minimal branch norm does not decrease along decreasing lambda");
        }
        for (std::size_t k = order.size() >= 2 ? order.size() - 2 : 0; k < order.size(); ++k) {
            const std::size_t i = order[k];
            if (!row_ok(out, i) || !cell_as<bool>(out, i, "two_positive")) {
                ++out.violations;
                out.warnings.push_back("fewer than two positive solutions at lambda " + format_real(s.lambda_grid[i]));
            }
        }
    }
    out.plot = {"lambda", {"min_branch_norm", "second_branch_norm"}, true, true, "branch norms vs lambda"};
    return out;
}

// ---------------------------------------------------------------------------
// dead-core

struct DeadCoreSettings {
    double q = 0.5;
    int n = 4000;
    double margin = 1.0;
    std::vector<double> outside;
    bool unextended = true;
    double residual_tol = 1e-6;
    SolveOptions solver;
};

inline DeadCoreSettings parse_dead_core(const Config& c) {
    DeadCoreSettings s;
    s.q = read_unit_exponent(c, "dead-core", "q", 0.5);
    long long n = c.integer("dead-core", "n", 4000);
    if (n < Mesh::kMinIntervals || n > 10000000) throw config_error("dead-core.n must be in [8, 1e7]");
    s.n = static_cast<int>(n);
    s.margin = c.real("dead-core", "margin", 1.0);
    if (!(s.margin > 0.0)) throw config_error("dead-core.margin must be positive");
    s.outside = c.grid("dead-core", "outside", {-1.0, -10.0});
    for (double v : s.outside) {
        if (!(v < 0.0)) throw config_error("dead-core.outside values must be negative");
    }
    s.unextended = c.boolean("dead-core", "unextended", true);
    s.residual_tol = c.real("dead-core", "residual_tol", 1e-6);
    s.solver = read_solver(c);
    return s;
}

inline std::string format_intervals(const std::vector<Subinterval>& v) {
    std::string s;
    for (const auto& i : v) s += (s.empty() ? "" : ";") + format_real(i.lo) + ":" + format_real(i.hi);
    return s;
}

inline ExperimentResult run_dead_core(const DeadCoreSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "dead-core";
    out.table.columns = with_status({"domain", "outside_value", "left", "right", "n", "residual", "newton_iterations",
                                     "verdict", "dead_cores", "cores"});
    const PexPair pair = pex_pair(s.q);
    const std::size_t count = s.outside.size() + (s.unextended ? 1 : 0);
    auto extended = [&](std::size_t i) { return i < s.outside.size(); };
    auto bounds = [&](std::size_t i) {
        return extended(i) ? std::pair{-s.margin, kPi + s.margin} : std::pair{0.0, kPi};
    };
    fill_rows(
        out, count, run.jobs,
        [&](std::size_t i) {
            auto [l, r] = bounds(i);
            return std::vector<Cell>{std::string(extended(i) ? "extended" : "unextended"),
                                     extended(i) ? Cell(s.outside[i]) : Cell(), l, r,
                                     static_cast<long long>(s.n)};
        },
        [&](std::size_t i) {
            auto [l, r] = bounds(i);
            Mesh mesh(Geometry::interval(l, r), s.n);
            Weight a = extended(i) ? Weight::closed_form("pex_extended", {s.q, s.outside[i]}) : pair.weight;
            ProblemSpec p{mesh, BoundaryCondition::dirichlet(), a, Nonlinearity::power(s.q)};
            GridFunction seed =
                GridFunction::sample(mesh, [&](double x) { return x > 0.0 && x < kPi ? pair.exact_u(x) : 0.0; });
            SolutionRecord rec = newton_solve(p, seed, s.solver);
            PositivityVerdict v = classify(rec.u, p.bc);
            return std::vector<Cell>{rec.residual_inf, static_cast<long long>(rec.iterations), to_string(v.kind),
                                     static_cast<long long>(v.dead_cores.size()), format_intervals(v.dead_cores)};
        });
    for (std::size_t i = 0; i < count; ++i) {
        if (!row_ok(out, i)) continue;
        const long long cores = cell_as<long long>(out, i, "dead_cores");
        const double res = cell_as<double>(out, i, "residual");
        std::string problem;
        if (extended(i) && cores < 1) problem = "no dead core detected";
        if (extended(i) && !(res <= s.residual_tol)) problem = "polished residual above tolerance";
        if (!extended(i) && cores != 0) problem = "dead core reported on the unextended domain";
        if (!problem.empty()) {
            ++out.violations;
            out.rows[i] = {"violation", problem};
            out.table.rows[i].back() = std::string("violation");
            out.warnings.push_back("row " + std::to_string(i) + ": " + problem);
        }
    }
    out.summary["q"] = s.q;
    out.summary["residual_tol"] = s.residual_tol;
    out.plot = {"outside_value", {"dead_cores"}, false, false, "dead cores vs extension value"};
    return out;
}

// ---------------------------------------------------------------------------
// solve-one

struct SolveOneSettings {
    Mesh mesh;
    BoundaryCondition bc;
    Weight weight = Weight::constant(1.0);
    Nonlinearity f = Nonlinearity::power(0.5);
    std::string method = "multistart";
    double init_amplitude = 1.0;
    int starts = 20;
    SolveOptions solver;
};

inline SolveOneSettings parse_solve_one(const Config& c) {
    SolveOneSettings s;
    s.mesh = read_mesh(c);
    s.bc = read_bc(c);
    s.weight = parse_weight(c.text("problem", "weight", "pex(0.5)"));
    s.f = parse_nonlinearity(c.text("problem", "f", "power(0.5)"));
    s.method = c.choice("solve-one", "method", "multistart", {"multistart", "newton", "bracket"});
    s.init_amplitude = c.real("solve-one", "init_amplitude", 1.0);
    if (!(s.init_amplitude >= 0.0)) throw config_error("solve-one.init_amplitude must be nonnegative");
    s.starts = read_starts(c, 20);
    s.solver = read_solver(c);
    return s;
}

inline ExperimentResult run_solve_one(const SolveOneSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "solve-one";
    out.table.columns = with_status({"solution", "x", "a", "u"});
    ProblemSpec p{s.mesh, s.bc, s.weight, s.f};
    const GridFunction a = s.weight.on(s.mesh);
    std::vector<SolutionRecord> sols;
    RowStatus failure;
    try {
        if (s.method == "multistart") {
            sols = multistart_solve(p, s.starts, run.seed, s.solver, run.jobs);
        } else if (s.method == "newton") {
            GridFunction init = GridFunction::sample(
                s.mesh, [&](double x) { return s.init_amplitude * detail::bump(s.mesh, s.bc, x); });
            sols.push_back(newton_solve(p, init, s.solver));
        } else {
            SubsolutionCertificate sub = auto_subsolution(p);
            auto sup = auto_supersolution(p);
            sols.push_back(monotone_iterate(p, sub.u, sup.first, s.solver));
        }
    } catch (const Error& e) {
        failure = {"failed", e.what()};
    }
    if (failure.status != "ok") {
        out.hard_failure = true;
        for (std::size_t i = 0; i < s.mesh.size(); ++i) {
            out.table.add({0LL, s.mesh.node(i), a[i], Cell(), failure.status});
            out.rows.push_back(failure);
        }
    }
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t k = 0; k < sols.size(); ++k) {
        PositivityVerdict v = classify(sols[k].u, s.bc);
        list.push_back({{"index", k},
                        {"norm", sols[k].u.max_abs()},
                        {"residual", sols[k].residual_inf},
                        {"iterations", sols[k].iterations},
                        {"method", to_string(sols[k].method)},
                        {"provenance", sols[k].provenance},
                        {"verdict", to_string(v.kind)},
                        {"dead_cores", v.dead_cores.size()}});
        for (std::size_t i = 0; i < s.mesh.size(); ++i) {
            out.table.add({static_cast<long long>(k), s.mesh.node(i), a[i], sols[k].u[i], std::string("ok")});
            out.rows.push_back({});
        }
    }
    out.summary["solutions"] = list;
    out.summary["weight"] = s.weight.description();
    out.summary["f"] = s.f.description();
    out.plot = {"x", {"u"}, false, false, "solutions"};
    return out;
}

// ---------------------------------------------------------------------------
// eigen

struct EigenSettings {
    Mesh mesh;
    Weight weight = Weight::constant(1.0);
    Subinterval ball;
    std::vector<double> scales;
    double q = 0.5;
};

inline EigenSettings parse_eigen(const Config& c) {
    EigenSettings s;
    s.mesh = read_mesh(c, 2000);
    s.weight = parse_weight(c.text("problem", "weight", "constant(1)"));
    s.ball = {c.real("eigen", "ball_lo", s.mesh.left()), c.real("eigen", "ball_hi", s.mesh.right())};
    if (!(s.ball.lo >= s.mesh.left() && s.ball.hi <= s.mesh.right() && s.ball.lo < s.ball.hi)) {
        throw config_error("eigen ball must be a subinterval of the domain");
    }
    s.scales = c.grid("eigen", "scales", {0.5, 1.0, 2.0, 10.0});
    for (double v : s.scales) {
        if (!(v > 0.0)) throw config_error("eigen.scales must be positive");
    }
    s.q = read_unit_exponent(c, "eigen", "q", 0.5);
    return s;
}

inline ExperimentResult run_eigen(const EigenSettings& s, const RunOptions& run) {
    ExperimentResult out;
    out.experiment = "eigen";
    out.table.columns = with_status({"scale", "lambda1", "scaling_ratio", "iterations", "residual", "eps_max"});
    const EigenPair base = principal_eigenpair(s.weight, s.ball, s.mesh);
    fill_rows(
        out, s.scales.size(), run.jobs, [&](std::size_t i) { return std::vector<Cell>{s.scales[i]}; },
        [&](std::size_t i) {
            EigenPair e = principal_eigenpair(s.weight.scaled(s.scales[i]), s.ball, s.mesh);
            return std::vector<Cell>{e.lambda1, s.scales[i] * e.lambda1 / base.lambda1,
                                     static_cast<long long>(e.iterations), e.residual, eps_max(s.q, e.lambda1)};
        });
    out.summary["base_lambda1"] = base.lambda1;
    out.summary["ball"] = {base.B.lo, base.B.hi};
    out.plot = {"scale", {"lambda1"}, true, true, "principal eigenvalue vs weight scale"};
    return out;
}

// ---------------------------------------------------------------------------
// dispatch

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"verify-pex",     "sweep-q",   "sweep-negative-part",
                                                   "neumann-law",    "ta-recursion", "concave-convex",
                                                   "dead-core",      "solve-one", "eigen"};
    return names;
}

/// Section and key that `--n` overrides, empty for experiments without a mesh.
inline std::optional<std::pair<std::string, std::string>> mesh_size_key(const std::string& experiment) {
    if (experiment == "verify-pex") return std::pair<std::string, std::string>{"verify-pex", "n_list"};
    if (experiment == "dead-core") return std::pair<std::string, std::string>{"dead-core", "n"};
    if (experiment == "ta-recursion") return std::nullopt;
    return std::pair<std::string, std::string>{"problem", "n"};
}

namespace detail {

template <typename Parse, typename Run>
ExperimentResult parse_then_run(const Config& cfg, Parse parse, Run run) {
    RunOptions opts;
    decltype(parse(cfg)) settings;
    try {
        opts = read_run(cfg);
        settings = parse(cfg);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) throw;
        throw config_error(e.what());
    }
    cfg.finish();
    return run(settings, opts);
}

}  // namespace detail

/// Parses the experiment's settings (ConfigError on bad or unknown keys),
/// then runs it.
inline ExperimentResult run_experiment(const std::string& name, const Config& cfg) {
    using detail::parse_then_run;
    if (name == "verify-pex") return parse_then_run(cfg, parse_verify_pex, run_verify_pex);
    if (name == "sweep-q") return parse_then_run(cfg, parse_sweep_q, run_sweep_q);
    if (name == "sweep-negative-part") return parse_then_run(cfg, parse_sweep_mu, run_sweep_mu);
    if (name == "neumann-law") return parse_then_run(cfg, parse_neumann, run_neumann);
    if (name == "ta-recursion") return parse_then_run(cfg, parse_ta, run_ta);
    if (name == "concave-convex") return parse_then_run(cfg, parse_cc, run_cc);
    if (name == "dead-core") return parse_then_run(cfg, parse_dead_core, run_dead_core);
    if (name == "solve-one") return parse_then_run(cfg, parse_solve_one, run_solve_one);
    if (name == "eigen") return parse_then_run(cfg, parse_eigen, run_eigen);
    throw config_error("unknown experiment '" + name + "'");
}

}  // namespace sublinear::lab
