#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "biharm/experiments.hpp"

namespace biharm {

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

// Fast invariant suite behind the `check` subcommand: rule exactness, mesh
// sanity, basis duality, the Morley b_h identity, symmetry, and one short
// conservation run.
inline std::vector<CheckResult> run_self_checks() {
    std::vector<CheckResult> out;
    auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
        out.push_back({name, ok, detail});
    };

    // quadrature exactness against closed-form monomial integrals on the
    // reference triangle: int x^p y^q = p! q! / (p+q+2)!
    auto exact_ref = [](int p, int q) {
        double v = 1.0;
        for (int i = 1; i <= p; ++i) v *= i;
        for (int i = 1; i <= q; ++i) v *= i;
        for (int i = 1; i <= p + q + 2; ++i) v /= i;
        return v;
    };
    auto rule_ok = [&](const TriRule& rule) {
        std::array<Vec2, 3> ref{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
        double worst = 0.0;
        for (int p = 0; p + 0 <= rule.degree; ++p)
            for (int q = 0; p + q <= rule.degree; ++q) {
                double s = 0.0;
                for (std::size_t i = 0; i < rule.points.size(); ++i) {
                    Vec2 x = rule.map(ref, static_cast<int>(i));
                    s += 0.5 * rule.points[i].w * std::pow(x.x, p) * std::pow(x.y, q);
                }
                worst = std::max(worst, std::abs(s - exact_ref(p, q)));
            }
        return worst < 1e-14;
    };
    check("quadrature: degree-4 rule exact", rule_ok(tri_rule_deg4()));
    check("quadrature: degree-6 rule exact", rule_ok(tri_rule_deg6()));
    check("quadrature: degree-10 rule exact", rule_ok(tri_rule_for_degree(10)));

    // mesh invariants on a non-square grid
    Mesh mesh = build_uniform(5, 3, {0.0, 0.0, 2.5, 1.0});
    bool euler = mesh.num_vertices() - mesh.num_edges() + mesh.num_triangles() == 1;
    check("mesh: Euler characteristic", euler);
    double area = 0.0;
    bool positive = true;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        double a = mesh.triangle_area(t);
        positive = positive && a > 0.0;
        area += a;
    }
    check("mesh: positive CCW areas", positive);
    check("mesh: areas sum to |Omega|", std::abs(area - 2.5) < 1e-13 * 2.5);

    // basis duality and ellipticity ingredients on a small square mesh
    Mesh sq = build_uniform(2, 2, {0.0, 0.0, 1.0, 1.0});
    for (SpaceKind kind : {SpaceKind::morley, SpaceKind::dg, SpaceKind::c0ip}) {
        Space sp = build_space(sq, kind);
        double worst = 0.0;
        for (int t = 0; t < sq.num_triangles(); ++t) {
            const LocalBasis& lb = sp.basis(t);
            auto v = sq.triangle_vertices(t);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 6; ++j) {
                    double expect = (j == i) ? 1.0 : 0.0;
                    worst = std::max(worst, std::abs(lb.value(j, v[i]) - expect));
                    Vec2 mid = (v[(i + 1) % 3] + v[(i + 2) % 3]) * 0.5;
                    double dof;
                    if (kind == SpaceKind::morley) {
                        const Edge& e = sq.edges[sq.tri_edges[t][i]];
                        dof = dot(lb.gradient(j, mid), e.normal);
                    } else {
                        dof = lb.value(j, mid);
                    }
                    worst = std::max(worst, std::abs(dof - ((j == 3 + i) ? 1.0 : 0.0)));
                }
            }
        }
        check("spaces: " + to_string(kind) + " dof duality", worst < 1e-12);

        SparseMatrix M = assemble_mass(sp);
        FormParams params;
        SparseMatrix A = assemble_ah(sp, params);
        check("forms: " + to_string(kind) + " mass symmetric",
              M.symmetry_defect() <= 1e-12 * M.max_abs());
        check("forms: " + to_string(kind) + " a_h symmetric",
              A.symmetry_defect() <= 1e-12 * A.max_abs());
    }

    // H2(i): b_h vanishes on the Morley space
    {
        Space sp = build_space(sq, SpaceKind::morley);
        SparseMatrix B = assemble_bh(sp);
        SparseMatrix A = assemble_apw(sp);
        check("forms: b_h zero on Morley x Morley", B.max_abs() <= 1e-12 * A.max_abs());
    }

    // dG partition of unity
    {
        Space sp = build_space(sq, SpaceKind::dg);
        SparseMatrix M = assemble_mass(sp);
        Vector ones(sp.ndof, 1.0);
        check("forms: dG mass against constants gives |Omega|",
              std::abs(M.quadratic_form(ones) - 1.0) < 1e-13);
    }

    // short conservation run (implicit, f = 0)
    {
        RunConfig cfg;
        cfg.problem = "example1";
        Problem problem = make_example1();
        problem.forcing_is_zero = true;
        problem.forcing = {};
        problem.has_exact = false;
        Discretization d = make_discretization(problem, SpaceKind::morley, 4, cfg);
        RunOptions opt;
        opt.integrator = Integrator::implicit_scheme;
        opt.k = d.h;
        opt.num_steps = 50;
        opt.solver.tol = 1e-13;
        Vector u0 = ritz_project(d.space, d.params, d.problem.u0, d.A, opt.solver);
        Vector v0(d.space.ndof, 0.0);
        RunResult res = run(d.M, d.A, u0, v0, {}, opt);
        check("timestep: implicit energy conservation (50 steps)",
              res.max_energy_drift < 1e-10,
              "drift " + format_double(res.max_energy_drift));
    }

    return out;
}

} // namespace biharm
