// Solves -u'' = a(x) sqrt(u) on (0, pi) for the pex weight, compares the
// Newton solution with the closed form and prints its cone verdict.
#include <cstdio>

#include "sublinear/sublinear.hpp"

int main() {
    using namespace sublinear;
    const double q = 0.5;
    Mesh mesh(Geometry::interval(0.0, kPi), 1000);
    PexPair pair = pex_pair(q);
    ProblemSpec problem{mesh, BoundaryCondition::dirichlet(), pair.weight, Nonlinearity::power(q)};

    GridFunction exact = GridFunction::sample(mesh, pair.exact_u);
    SolutionRecord rec = newton_solve(problem, exact);
    PositivityVerdict v = classify(rec.u, problem.bc);

    std::printf("residual of sampled exact pair  %.3e\n", residual_norm(problem, exact));
    std::printf("newton residual / iterations     %.3e / %d\n", rec.residual_inf, rec.iterations);
    std::printf("max |u_h - u|                    %.3e\n", sup_distance(rec.u, exact));
    std::printf("verdict                          %s\n", to_string(v.kind).c_str());
    std::printf("u'(0), u'(pi)                    %.3e, %.3e\n", v.boundary_derivs.first, v.boundary_derivs.second);

    for (auto& sol : multistart_solve(problem, 10, 1)) {
        std::printf("multistart: |u|_inf = %.6f  %s\n", sol.u.max_abs(),
                    to_string(classify(sol.u, problem.bc).kind).c_str());
    }
}
