#pragma once

#include <stdexcept>

#include "biharm/fields.hpp"
#include "biharm/forms.hpp"
#include "biharm/spaces.hpp"
#include "biharm/sparse.hpp"

namespace biharm {

// Morley interpolation: vertex dofs take point values, edge dofs the mean
// normal derivative across the edge (2-point Gauss, exact for a linear
// normal derivative; for smooth inputs the two-sided average is one-sided).
inline Vector morley_interpolate(const Space& space, const ScalarField& w) {
    if (space.kind != SpaceKind::morley)
        throw std::invalid_argument("morley_interpolate: space is not Morley");
    const Mesh& mesh = *space.mesh;
    Vector r(space.ndof, 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        for (int i = 0; i < 3; ++i) {
            int vd = space.cell_dofs[t][i];
            if (vd >= 0) r[vd] = w.value(mesh.vertices[mesh.triangles[t][i]]);
            int edof = space.cell_dofs[t][3 + i];
            if (edof >= 0) {
                const Edge& e = mesh.edges[mesh.tri_edges[t][i]];
                Vec2 a = mesh.vertices[e.a], b = mesh.vertices[e.b];
                double mean = 0.0;
                for (const auto& qp : edge_rule_2().points)
                    mean += qp.w * dot(w.grad(a + (b - a) * qp.t), e.normal);
                r[edof] = mean;
            }
        }
    }
    return r;
}

// Right-hand side sum_K int_K D2 w : D2 phi_i (the broken Hessian pairing);
// exact up to the element rule since basis Hessians are constant.
inline Vector hessian_pairing(const Space& space, const ScalarField& w,
                              const TriRule& rule = tri_rule_deg4()) {
    const Mesh& mesh = *space.mesh;
    Vector g(space.ndof, 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto v = mesh.triangle_vertices(t);
        const double area = mesh.triangle_area(t);
        Hess avg{};
        for (std::size_t q = 0; q < rule.points.size(); ++q)
            avg = avg + w.hess(rule.map(v, static_cast<int>(q))) * rule.points[q].w;
        for (int j = 0; j < 6; ++j) {
            int dof = space.cell_dofs[t][j];
            if (dof >= 0) g[dof] += area * frob(avg, space.basis(t).hessian(j));
        }
    }
    return g;
}

// Smoother-free Ritz projection. For analytic data (bilaplacian available)
// the right-hand side is (Lap^2 w, v_h), the limit of the defining pairing
// a(w, Q v_h) as the smoother drops out; its consistency defect is O(h^2) in
// the energy norm for all three schemes. Data without a bilaplacian (e.g.
// discrete functions lifted to fields) falls back to the broken pairing
// a_pw(w, v_h), which is exact on the Morley space itself.
inline Vector ritz_rhs(const Space& space, const ScalarField& w) {
    if (w.bilaplacian) return assemble_load(space, w.bilaplacian);
    return hessian_pairing(space, w);
}

inline Vector ritz_project(const Space& space, const FormParams& params, const ScalarField& w,
                           const SparseMatrix& ah, const SolverConfig& cfg = {}) {
    return solve_spd(ah, ritz_rhs(space, w), cfg, "stiffness matrix");
}

inline Vector ritz_project(const Space& space, const FormParams& params, const ScalarField& w,
                           const SolverConfig& cfg = {}) {
    return ritz_project(space, params, w, assemble_ah(space, params), cfg);
}

inline Vector l2_project(const Space& space, const ScalarField& w, const SolverConfig& cfg = {}) {
    SparseMatrix m = assemble_mass(space);
    Vector b = assemble_load(space, w.value);
    return solve_spd(m, b, cfg, "mass matrix");
}

} // namespace biharm
