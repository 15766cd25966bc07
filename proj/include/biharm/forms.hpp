#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "biharm/fields.hpp"
#include "biharm/geometry.hpp"
#include "biharm/mesh.hpp"
#include "biharm/quadrature.hpp"
#include "biharm/spaces.hpp"
#include "biharm/sparse.hpp"

namespace biharm {

struct FormParams {
    double sigma_dg1 = 10.0;
    double sigma_dg2 = 15.0;
    double sigma_ip = 10.0;
    // material coefficient c(x); sampled once per triangle at the centroid
    std::function<double(Vec2)> coefficient;

    double c_at(Vec2 x) const { return coefficient ? coefficient(x) : 1.0; }
};

using Mat6 = std::array<std::array<double, 6>, 6>;
using Mat12 = std::array<std::array<double, 12>, 12>;

// ---------------------------------------------------------------------------
// Element kernels. Hessians of P2 are constant per triangle, so the bending
// term needs no quadrature at all when c is piecewise constant.

inline Mat6 local_apw(const LocalBasis& lb, double area, double c) {
    Mat6 m{};
    std::array<Hess, 6> h;
    for (int j = 0; j < 6; ++j) h[j] = lb.hessian(j);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) m[i][j] = c * area * frob(h[i], h[j]);
    return m;
}

inline Mat6 local_mass(const LocalBasis& lb, double area, const TriRule& rule) {
    Mat6 m{};
    const auto& v = lb.vertices();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        Vec2 x = rule.map(v, static_cast<int>(q));
        double w = area * rule.points[q].w;
        std::array<double, 6> phi;
        for (int j = 0; j < 6; ++j) phi[j] = lb.value(j, x);
        for (int i = 0; i < 6; ++i)
            for (int j = i; j < 6; ++j) {
                double v = w * phi[i] * phi[j];
                m[i][j] += v;
                if (j != i) m[j][i] += v;
            }
    }
    return m;
}

inline std::array<double, 6> local_load(const LocalBasis& lb, double area, const TriRule& rule,
                                        const std::function<double(Vec2)>& g) {
    std::array<double, 6> f{};
    const auto& v = lb.vertices();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        Vec2 x = rule.map(v, static_cast<int>(q));
        double w = area * rule.points[q].w * g(x);
        for (int j = 0; j < 6; ++j) f[j] += w * lb.value(j, x);
    }
    return f;
}

// ---------------------------------------------------------------------------
// Edge kernels. Local functions are indexed 0..5 for the left triangle and
// 6..11 for the right one; each is treated as supported on its own triangle,
// so jumps carry sign +1 / -1 and averages weight 1/2 per side (trace on
// boundary edges, where only indices 0..5 are active).

struct EdgeContext {
    Vec2 a, b;       // endpoints, left triangle traverses a->b CCW
    Vec2 normal;     // unit, left -> right
    double length;
    const LocalBasis* left;
    const LocalBasis* right; // nullptr on boundary
    double c_left = 1.0;
    double c_right = 1.0;

    int ndofs() const { return right ? 12 : 6; }
    Vec2 point(double t) const { return a + (b - a) * t; }
    const LocalBasis& side(int u) const { return u < 6 ? *left : *right; }
    double sign(int u) const { return u < 6 ? 1.0 : -1.0; }
    double avg_weight() const { return right ? 0.5 : 1.0; }
};

// consistency term: -int_e [[grad w]].{{c D2 v}} n - (w <-> v)
inline Mat12 local_bh_edge(const EdgeContext& e) {
    Mat12 m{};
    const int nd = e.ndofs();
    std::array<Vec2, 12> avg_hn{};
    for (int u = 0; u < nd; ++u) {
        double c = (u < 6 ? e.c_left : e.c_right) * e.avg_weight();
        avg_hn[u] = apply(e.side(u).hessian(u % 6), e.normal) * c;
    }
    const EdgeRule& rule = edge_rule_2(); // jump of grad is linear, average constant
    for (const auto& qp : rule.points) {
        Vec2 x = e.point(qp.t);
        double w = e.length * qp.w;
        std::array<Vec2, 12> jg{};
        for (int u = 0; u < nd; ++u) jg[u] = e.side(u).gradient(u % 6, x) * e.sign(u);
        for (int i = 0; i < nd; ++i)
            for (int j = 0; j < nd; ++j)
                m[i][j] -= w * (dot(jg[j], avg_hn[i]) + dot(jg[i], avg_hn[j]));
    }
    return m;
}

// jump penalties: sigma1/h^3 [[w]][[v]] + sigma2/h [[dw/dn]][[dv/dn]]
inline Mat12 local_penalty_edge(const EdgeContext& e, double sigma_value, double sigma_normal) {
    Mat12 m{};
    const int nd = e.ndofs();
    const double h = e.length;
    if (sigma_value != 0.0) {
        const EdgeRule& rule = edge_rule_3(); // product of two quadratics
        for (const auto& qp : rule.points) {
            Vec2 x = e.point(qp.t);
            double w = h * qp.w * sigma_value / (h * h * h);
            std::array<double, 12> jv{};
            for (int u = 0; u < nd; ++u) jv[u] = e.sign(u) * e.side(u).value(u % 6, x);
            for (int i = 0; i < nd; ++i)
                for (int j = i; j < nd; ++j) {
                    double v = w * jv[i] * jv[j];
                    m[i][j] += v;
                    if (j != i) m[j][i] += v;
                }
        }
    }
    if (sigma_normal != 0.0) {
        const EdgeRule& rule = edge_rule_2(); // product of two linears
        for (const auto& qp : rule.points) {
            Vec2 x = e.point(qp.t);
            double w = h * qp.w * sigma_normal / h;
            std::array<double, 12> jn{};
            for (int u = 0; u < nd; ++u)
                jn[u] = e.sign(u) * dot(e.side(u).gradient(u % 6, x), e.normal);
            for (int i = 0; i < nd; ++i)
                for (int j = i; j < nd; ++j) {
                    double v = w * jn[i] * jn[j];
                    m[i][j] += v;
                    if (j != i) m[j][i] += v;
                }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Global assembly

namespace detail {

inline void scatter(TripletAccumulator& acc, const Mat6& m, const std::array<int, 6>& dofs) {
    for (int i = 0; i < 6; ++i) {
        if (dofs[i] < 0) continue;
        for (int j = 0; j < 6; ++j)
            if (dofs[j] >= 0) acc.add(dofs[i], dofs[j], m[i][j]);
    }
}

inline void scatter(TripletAccumulator& acc, const Mat12& m, const std::array<int, 12>& dofs,
                    int nd) {
    for (int i = 0; i < nd; ++i) {
        if (dofs[i] < 0) continue;
        for (int j = 0; j < nd; ++j)
            if (dofs[j] >= 0) acc.add(dofs[i], dofs[j], m[i][j]);
    }
}

inline EdgeContext edge_context(const Space& space, int e, const FormParams& params) {
    const Mesh& mesh = *space.mesh;
    const Edge& ed = mesh.edges[e];
    EdgeContext ctx;
    ctx.a = mesh.vertices[ed.a];
    ctx.b = mesh.vertices[ed.b];
    ctx.normal = ed.normal;
    ctx.length = ed.length;
    ctx.left = &space.basis(ed.left);
    ctx.c_left = params.c_at(mesh.triangle_centroid(ed.left));
    ctx.right = ed.on_boundary() ? nullptr : &space.basis(ed.right);
    if (ctx.right) ctx.c_right = params.c_at(mesh.triangle_centroid(ed.right));
    return ctx;
}

inline std::array<int, 12> edge_dofs(const Space& space, int e) {
    const Edge& ed = space.mesh->edges[e];
    std::array<int, 12> dofs;
    dofs.fill(kEliminated);
    for (int j = 0; j < 6; ++j) dofs[j] = space.cell_dofs[ed.left][j];
    if (!ed.on_boundary())
        for (int j = 0; j < 6; ++j) dofs[6 + j] = space.cell_dofs[ed.right][j];
    return dofs;
}

} // namespace detail

enum class EdgeSet { all, interior };

inline SparseMatrix assemble_apw(const Space& space, const FormParams& params = {}) {
    TripletAccumulator acc(space.ndof, space.ndof);
    const Mesh& mesh = *space.mesh;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        double c = params.c_at(mesh.triangle_centroid(t));
        detail::scatter(acc, local_apw(space.basis(t), mesh.triangle_area(t), c),
                        space.cell_dofs[t]);
    }
    return acc.compress();
}

inline SparseMatrix assemble_bh(const Space& space, const FormParams& params = {},
                                EdgeSet edge_set = EdgeSet::all) {
    TripletAccumulator acc(space.ndof, space.ndof);
    for (int e = 0; e < space.mesh->num_edges(); ++e) {
        if (edge_set == EdgeSet::interior && space.mesh->edges[e].on_boundary()) continue;
        EdgeContext ctx = detail::edge_context(space, e, params);
        detail::scatter(acc, local_bh_edge(ctx), detail::edge_dofs(space, e), ctx.ndofs());
    }
    return acc.compress();
}

inline SparseMatrix assemble_penalty(const Space& space, const FormParams& params,
                                     EdgeSet edge_set = EdgeSet::all) {
    if (space.kind == SpaceKind::morley)
        throw std::invalid_argument("assemble_penalty: no penalty form for the Morley space");
    const double sv = space.kind == SpaceKind::dg ? params.sigma_dg1 : 0.0;
    const double sn = space.kind == SpaceKind::dg ? params.sigma_dg2 : params.sigma_ip;
    TripletAccumulator acc(space.ndof, space.ndof);
    for (int e = 0; e < space.mesh->num_edges(); ++e) {
        if (edge_set == EdgeSet::interior && space.mesh->edges[e].on_boundary()) continue;
        EdgeContext ctx = detail::edge_context(space, e, params);
        detail::scatter(acc, local_penalty_edge(ctx, sv, sn), detail::edge_dofs(space, e),
                        ctx.ndofs());
    }
    return acc.compress();
}

inline SparseMatrix assemble_ah(const Space& space, const FormParams& params = {}) {
    SparseMatrix a = assemble_apw(space, params);
    if (space.kind == SpaceKind::morley) return a;
    if ((space.kind == SpaceKind::dg &&
         (params.sigma_dg1 <= 0.0 || params.sigma_dg2 <= 0.0)) ||
        (space.kind == SpaceKind::c0ip && params.sigma_ip <= 0.0))
        throw std::invalid_argument("assemble_ah: penalty parameters must be positive");
    a = a.add_scaled(assemble_bh(space, params), 1.0);
    return a.add_scaled(assemble_penalty(space, params), 1.0);
}

inline SparseMatrix assemble_mass(const Space& space) {
    TripletAccumulator acc(space.ndof, space.ndof);
    const Mesh& mesh = *space.mesh;
    const TriRule& rule = tri_rule_deg4(); // exact for P2 x P2
    for (int t = 0; t < mesh.num_triangles(); ++t)
        detail::scatter(acc, local_mass(space.basis(t), mesh.triangle_area(t), rule),
                        space.cell_dofs[t]);
    return acc.compress();
}

// Load vector for a (possibly non-polynomial) source; the degree-10 rule
// integrates the built-in manufactured right-hand sides exactly.
inline Vector assemble_load(const Space& space, const std::function<double(Vec2)>& g,
                            int quad_degree = 10) {
    Vector f(space.ndof, 0.0);
    const Mesh& mesh = *space.mesh;
    const TriRule rule = tri_rule_for_degree(quad_degree);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        auto lf = local_load(space.basis(t), mesh.triangle_area(t), rule, g);
        for (int j = 0; j < 6; ++j) {
            int gdof = space.cell_dofs[t][j];
            if (gdof >= 0) f[gdof] += lf[j];
        }
    }
    return f;
}

inline Vector assemble_load(const Space& space, const TimeField& g, double t, int quad_degree = 10) {
    return assemble_load(space, [&](Vec2 x) { return g(x, t); }, quad_degree);
}

// ---------------------------------------------------------------------------
// Mesh-dependent (broken) norm: broken H2 seminorm + scaled vertex jumps +
// edge-mean normal-derivative jumps (boundary edges contribute traces).

namespace detail {

// per-edge linear functionals: jump at both endpoints and mean normal jump
struct EdgeJumpFunctionals {
    std::array<double, 12> at_a{};
    std::array<double, 12> at_b{};
    std::array<double, 12> mean_dn{};
    int nd;
};

inline EdgeJumpFunctionals edge_jump_functionals(const EdgeContext& e) {
    EdgeJumpFunctionals f;
    f.nd = e.ndofs();
    for (int u = 0; u < f.nd; ++u) {
        f.at_a[u] = e.sign(u) * e.side(u).value(u % 6, e.a);
        f.at_b[u] = e.sign(u) * e.side(u).value(u % 6, e.b);
    }
    const EdgeRule& rule = edge_rule_2(); // normal derivative jump is linear
    for (const auto& qp : rule.points) {
        Vec2 x = e.point(qp.t);
        for (int u = 0; u < f.nd; ++u)
            f.mean_dn[u] += qp.w * e.sign(u) * dot(e.side(u).gradient(u % 6, x), e.normal);
    }
    return f;
}

} // namespace detail

// Gram matrix H with v' H v = ||v||_h^2.
inline SparseMatrix assemble_mesh_norm_gram(const Space& space) {
    TripletAccumulator acc(space.ndof, space.ndof);
    const Mesh& mesh = *space.mesh;
    for (int t = 0; t < mesh.num_triangles(); ++t)
        detail::scatter(acc, local_apw(space.basis(t), mesh.triangle_area(t), 1.0),
                        space.cell_dofs[t]);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        EdgeContext ctx = detail::edge_context(space, e, {});
        auto f = detail::edge_jump_functionals(ctx);
        auto dofs = detail::edge_dofs(space, e);
        const double hinv2 = 1.0 / (ctx.length * ctx.length);
        Mat12 m{};
        for (int i = 0; i < f.nd; ++i)
            for (int j = 0; j < f.nd; ++j)
                m[i][j] = hinv2 * (f.at_a[i] * f.at_a[j] + f.at_b[i] * f.at_b[j]) +
                          f.mean_dn[i] * f.mean_dn[j];
        detail::scatter(acc, m, dofs, f.nd);
    }
    return acc.compress();
}

inline double mesh_dependent_norm(const Space& space, const Vector& v) {
    const Mesh& mesh = *space.mesh;
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        Hess h = space.evaluate_hessian(t, v);
        s += mesh.triangle_area(t) * frob(h, h);
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        EdgeContext ctx = detail::edge_context(space, e, {});
        auto f = detail::edge_jump_functionals(ctx);
        auto dofs = detail::edge_dofs(space, e);
        double ja = 0.0, jb = 0.0, jn = 0.0;
        for (int u = 0; u < f.nd; ++u) {
            if (dofs[u] < 0) continue;
            ja += f.at_a[u] * v[dofs[u]];
            jb += f.at_b[u] * v[dofs[u]];
            jn += f.mean_dn[u] * v[dofs[u]];
        }
        s += (ja * ja + jb * jb) / (ctx.length * ctx.length) + jn * jn;
    }
    return std::sqrt(s);
}

} // namespace biharm
