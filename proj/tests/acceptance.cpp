// One PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "oracles.hpp"
#include "sublinear/classify.hpp"
#include "sublinear/lab/driver.hpp"
#include "sublinear/sublinear.hpp"

using namespace sublinear;
using namespace sublinear::lab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

const std::filesystem::path kConfigs = std::filesystem::path(SUBLINEAR_SOURCE_DIR) / "configs";

Config shipped(const std::string& experiment) { return Config::load((kConfigs / (experiment + ".cfg")).string()); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Mesh pi_mesh(int n) { return Mesh(Geometry::interval(0.0, kPi), n); }

double pex_residual(int n) {
    Mesh m = pi_mesh(n);
    return oracle::dirichlet_residual(m.nodes(), GridFunction::sample(m, [](double x) { return oracle::pex_u(0.5, x); }).vec(),
                                      [](double x) { return oracle::pex_a(0.5, x); },
                                      [](double s) { return std::sqrt(s); });
}

// 1
Outcome pex_oracle() {
    const int ns[] = {250, 500, 1000, 2000};
    double r[4];
    for (int k = 0; k < 4; ++k) r[k] = pex_residual(ns[k]);
    Mesh fine = pi_mesh(2000);
    ProblemSpec p{fine, BoundaryCondition::dirichlet(), Weight::pex(0.5), Nonlinearity::power(0.5)};
    double lib = residual_norm(p, GridFunction::sample(fine, [](double x) { return oracle::pex_u(0.5, x); }));
    bool ok = r[3] <= 5e-5 && std::abs(lib - r[3]) <= 1e-9;  // both round O(1/h^2) stencil terms
    std::string d = "residual(2000)=" + fmt("%.3e", r[3]) + " ratios";
    for (int k = 1; k < 4; ++k) {
        double q = r[k - 1] / r[k];
        ok = ok && q >= 3.6 && q <= 4.4;
        d += " " + fmt("%.4f", q);
    }
    return {ok, d};
}

// 2
Outcome pex_cone_failure() {
    Mesh m = pi_mesh(2000);
    ProblemSpec p{m, BoundaryCondition::dirichlet(), Weight::pex(0.5), Nonlinearity::power(0.5)};
    SolutionRecord rec = newton_solve(p, GridFunction::sample(m, [](double x) { return oracle::pex_u(0.5, x); }));
    PositivityVerdict v = classify(rec.u, p.bc);
    bool ok = v.kind == VerdictKind::PositiveNotInCone && std::abs(v.boundary_derivs.first) <= 1e-3 &&
              std::abs(v.boundary_derivs.second) <= 1e-3 && rec.residual_inf <= 1e-10;
    return {ok, "verdict=" + to_string(v.kind) + " derivs=" + fmt("%.2e", v.boundary_derivs.first) + "," +
                    fmt("%.2e", v.boundary_derivs.second)};
}

// 3
Outcome eigen_accuracy() {
    Mesh m = pi_mesh(2000);
    double l1 = principal_eigenpair(Weight::constant(1.0), {0.0, kPi}, m).lambda1;
    bool ok = std::abs(l1 - 1.0) <= 1e-6;
    double worst = 0.0;
    for (double c : {0.5, 2.0, 10.0}) {
        double lc = principal_eigenpair(Weight::constant(1.0).scaled(c), {0.0, kPi}, m).lambda1;
        worst = std::max(worst, std::abs(lc * c / l1 - 1.0));
    }
    ok = ok && worst <= 1e-10;
    return {ok, "lambda1=" + fmt("%.10f", l1) + " scaling_err=" + fmt("%.1e", worst)};
}

// 4
Outcome bracket_suite() {
    Mesh m = pi_mesh(200);
    ProblemSpec p{m, BoundaryCondition::dirichlet(), Weight::constant(1.0), Nonlinearity::power(0.5)};
    GridFunction sub = GridFunction::sample(m, [](double x) { return std::sin(x); });
    sub[m.n()] = 0.0;
    auto [sup, k] = auto_supersolution(p);
    bool k4 = is_supersolution(p, build_supersolution(p, 4.0));
    SolveOptions o;
    bool monotone = true;
    o.observer = [&](const MonotoneStep& s) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            monotone = monotone && sub[i] <= (*s.current)[i] && (*s.previous)[i] <= (*s.current)[i] &&
                       (*s.current)[i] <= sup[i];
        }
    };
    SolutionRecord br = monotone_iterate(p, sub, sup, o);
    SolutionRecord nw = newton_solve(p, sup);
    double agree = sup_distance(br.u, nw.u);
    int nontrivial = 0;
    for (const auto& s : multistart_solve(p, 10, 1)) nontrivial += !s.trivial;
    bool ok = k4 && monotone && br.residual_inf <= 1e-10 && agree <= 1e-8 && nontrivial == 1;
    return {ok, "k=" + fmt("%g", k) + " residual=" + fmt("%.2e", br.residual_inf) + " agreement=" +
                    fmt("%.2e", agree) + " nontrivial=" + std::to_string(nontrivial)};
}

// 5
Outcome negative_part() {
    ExperimentResult r = run_experiment("sweep-negative-part", shipped("sweep-negative-part"));
    const auto& star = r.summary["mu_star"];
    bool star_pos = star.is_number() && star.get<double>() > 0.0;
    std::size_t top = 0;
    for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
        if (cell_as<double>(r, i, "mu") == 1.0) top = i;
    }
    bool fails = row_ok(r, top) && !cell_as<bool>(r, top, "all_in_cone") &&
                 cell_as<std::string>(r, top, "verdicts").find("PositiveNotInCone") != std::string::npos;
    return {star_pos && fails && !r.hard_failure,
            "mu_star=" + star.dump() + " at_mu_1=" + (row_ok(r, top) ? cell_as<std::string>(r, top, "verdicts") : "failed")};
}

// 6
Outcome sweep_q() {
    ExperimentResult r = run_experiment("sweep-q", shipped("sweep-q"));
    std::string pat = r.summary["pattern"].get<std::string>();
    long long viol = r.summary["pattern_violations"].get<long long>();
    bool ok = !r.hard_failure && pat.size() == 10 && pat.front() == 'F' && pat.back() == 'T' && viol == 0 &&
              pat.find('?') == std::string::npos;
    return {ok, "pattern=" + pat + " violations=" + std::to_string(viol) + " q_hat=" + r.summary["q_hat"].dump()};
}

// 7
Outcome neumann_law() {
    ExperimentResult r = run_experiment("neumann-law", shipped("neumann-law"));
    int pos = 0, zero = 0, neg = 0;
    for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
        double I = cell_as<double>(r, i, "integral");
        if (std::abs(I) < 1e-6) ++zero;
        else if (I > 0) ++pos;
        else ++neg;
    }
    bool ok = !r.hard_failure && r.violations == 0 && r.table.rows.size() >= 6 && pos > 0 && zero > 0 && neg > 0;
    return {ok, "weights=" + std::to_string(r.table.rows.size()) + " (+" + std::to_string(pos) + " 0:" +
                    std::to_string(zero) + " -" + std::to_string(neg) + ") violations=" + std::to_string(r.violations)};
}

// 8
Outcome ta_recursion() {
    // independent evaluation of the recursion
    double q = 0.0;
    bool mono = true;
    double q1 = 0.0;
    for (int n = 1; n <= 200; ++n) {
        double next = 1.0 / (2.0 - q) - 0.1 * (q - 1.0) * (q - 1.0) / (2.0 - q);
        mono = mono && next > q && next <= 1.0;
        q = next;
        if (n == 1) q1 = q;
    }
    ExperimentResult r = run_experiment("ta-recursion", shipped("ta-recursion"));
    double lab_q1 = cell_as<double>(r, 1, "q_n");
    double lab_last = cell_as<double>(r, 200, "q_n");
    bool ok = std::abs(q1 - 0.45) <= 1e-15 && std::abs(lab_q1 - 0.45) <= 1e-15 && mono && r.violations == 0 &&
              1.0 - q < 0.05 && lab_last == q;
    return {ok, "q1=" + fmt("%.17g", lab_q1) + " gap200=" + fmt("%.4e", 1.0 - lab_last)};
}

// 9
Outcome transform() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        double q0 = 0.99 * U(rng);
        double q = q0 + (1.0 - q0) * (0.001 + 0.998 * U(rng));
        RegularizedTransform t = RegularizedTransform::make(q0, q);
        worst = std::max({worst, std::abs(1.0 - t.beta - t.gamma * t.beta), std::abs(q / t.beta - q0 - t.gamma)});
    }
    Mesh m = pi_mesh(1000);
    ProblemSpec p{m, BoundaryCondition::dirichlet(), Weight::pex(0.5), Nonlinearity::power(0.5)};
    SolutionRecord seed = newton_solve(p, GridFunction::sample(m, [](double x) { return oracle::pex_u(0.5, x); }));
    RegularizedTransform t = RegularizedTransform::make(0.45, 0.5);
    RegularizationPath path = regularization_path(p, t, seed.u);
    const GridFunction& w = path.limit.u;
    double res = oracle::dirichlet_residual(m.nodes(), w.vec(), [&](double x) { return t.beta * oracle::pex_a(0.5, x); },
                                            [&](double s) { return std::pow(s, t.q0); });
    GridFunction lower = limit_subsolution(p, t, seed.u);
    bool ordered = lower.max() > 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        ordered = ordered && lower[i] <= w[i] + 1e-12 && w[i] <= std::pow(seed.u[i], t.beta) + 1e-12;
    }
    bool ok = worst <= 1e-12 && res <= 1e-6 && ordered;
    return {ok, "identity_err=" + fmt("%.1e", worst) + " lp_residual=" + fmt("%.2e", res) +
                    " ordered=" + (ordered ? "yes" : "no") + " stages_complete=" + (path.complete ? "yes" : "no")};
}

// 10
Outcome dead_core() {
    ExperimentResult r = run_experiment("dead-core", shipped("dead-core"));
    bool ok = !r.hard_failure && r.violations == 0;
    std::string d;
    for (std::size_t i = 0; i < r.table.rows.size(); ++i) {
        if (cell_as<std::string>(r, i, "domain") != "extended") continue;
        long long cores = cell_as<long long>(r, i, "dead_cores");
        double res = cell_as<double>(r, i, "residual");
        ok = ok && cores >= 1 && res <= 1e-6;
        d += "outside=" + fmt("%g", cell_as<double>(r, i, "outside_value")) + ":cores=" + std::to_string(cores) +
             ",res=" + fmt("%.1e", res) + " ";
    }
    return {ok, d};
}

// 11
Outcome concave_convex() {
    ExperimentResult r = run_experiment("concave-convex", shipped("concave-convex"));
    std::vector<std::pair<double, std::size_t>> by_lambda;
    for (std::size_t i = 0; i < r.table.rows.size(); ++i) by_lambda.emplace_back(cell_as<double>(r, i, "lambda"), i);
    std::sort(by_lambda.begin(), by_lambda.end());
    bool ok = !r.hard_failure && by_lambda.size() >= 2;
    for (std::size_t k = 0; k < 2 && k < by_lambda.size(); ++k) {
        ok = ok && cell_as<long long>(r, by_lambda[k].second, "positive") >= 2;
    }
    std::string d = "min_norms";
    for (std::size_t k = 0; k < by_lambda.size(); ++k) {
        double v = cell_as<double>(r, by_lambda[k].second, "min_branch_norm");
        d += " " + fmt("%.4g", v);
        if (k > 0) ok = ok && cell_as<double>(r, by_lambda[k - 1].second, "min_branch_norm") < v;
    }
    return {ok, d};
}

// 12
Outcome determinism() {
    std::string d;
    bool ok = true;
    for (const auto& name : experiment_names()) {
        Config a = shipped(name), b = shipped(name);
        a.set("run", "jobs", "1");
        b.set("run", "jobs", "4");
        std::string ca = run_experiment(name, a).table.csv();
        std::string cb = run_experiment(name, b).table.csv();
        std::string cc = run_experiment(name, shipped(name)).table.csv();
        if (ca != cb || ca != cc) {
            ok = false;
            d += name + " differs; ";
        }
    }
    return {ok, ok ? "all 9 experiments byte-identical across reruns and job counts" : d};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"pex oracle residual and order", pex_oracle},
        {"pex solution outside the cone", pex_cone_failure},
        {"principal eigenvalue and scaling", eigen_accuracy},
        {"bracket iteration, Newton agreement, uniqueness", bracket_suite},
        {"negative-part threshold", negative_part},
        {"q sweep verdict pattern", sweep_q},
        {"Neumann integral law", neumann_law},
        {"ta recursion", ta_recursion},
        {"regularization transform and path", transform},
        {"dead core", dead_core},
        {"concave-convex two branches", concave_convex},
        {"determinism", determinism},
    };
    int failed = 0, index = 0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s criterion %2d: %s | %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
        std::fflush(stdout);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d/12 criteria passed in %.1f s\n", 12 - failed, secs);
    return failed == 0 ? 0 : 1;
}
