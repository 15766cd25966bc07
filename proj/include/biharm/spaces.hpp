#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "biharm/geometry.hpp"
#include "biharm/mesh.hpp"
#include "biharm/sparse.hpp"

namespace biharm {

enum class SpaceKind { morley, dg, c0ip };

inline std::string to_string(SpaceKind k) {
    switch (k) {
        case SpaceKind::morley: return "morley";
        case SpaceKind::dg: return "dg";
        case SpaceKind::c0ip: return "c0ip";
    }
    return "?";
}

struct BasisEval {
    double value;
    Vec2 grad;
    Hess hess;
};

// P2 basis on one physical triangle, dual to the space's dof functionals:
// Morley uses vertex values plus mean normal derivatives across the edges
// (signed by the mesh's global edge normal); dG and C0IP use Lagrange values
// at vertices and edge midpoints. Built by inverting the 6x6 functional
// matrix against centered, h-scaled monomials {1, X, Y, X^2, XY, Y^2}.
class LocalBasis {
public:
    static LocalBasis build(SpaceKind kind, const std::array<Vec2, 3>& v,
                            const std::array<Vec2, 3>& edge_normals) {
        LocalBasis lb;
        lb.center_ = (v[0] + v[1] + v[2]) * (1.0 / 3.0);
        lb.scale_ = std::max({norm(v[1] - v[0]), norm(v[2] - v[1]), norm(v[0] - v[2])});
        lb.verts_ = v;

        std::array<double, 36> V{};
        auto row_value = [&](int r, Vec2 x) {
            auto m = lb.monomials(x);
            for (int k = 0; k < 6; ++k) V[r * 6 + k] = m[k];
        };
        for (int i = 0; i < 3; ++i) row_value(i, v[i]);
        for (int i = 0; i < 3; ++i) {
            Vec2 mid = (v[(i + 1) % 3] + v[(i + 2) % 3]) * 0.5;
            if (kind == SpaceKind::morley) {
                // normal derivative of a P2 function is linear along the
                // edge, so its mean equals the midpoint value
                auto g = lb.monomial_grads(mid);
                for (int k = 0; k < 6; ++k) V[(3 + i) * 6 + k] = dot(g[k], edge_normals[i]);
            } else {
                row_value(3 + i, mid);
            }
        }

        // columns of V^{-1} are the monomial coefficients of the dual basis
        std::array<double, 36> rhs{};
        for (int j = 0; j < 6; ++j) rhs[j * 6 + j] = 1.0;
        solve_dense<6>(V, rhs.data(), 6);
        for (int j = 0; j < 6; ++j)
            for (int k = 0; k < 6; ++k) lb.coef_[j][k] = rhs[j * 6 + k];
        return lb;
    }

    BasisEval eval(int j, Vec2 x) const {
        auto m = monomials(x);
        auto g = monomial_grads(x);
        BasisEval out{0.0, {0.0, 0.0}, hessian(j)};
        for (int k = 0; k < 6; ++k) {
            out.value += coef_[j][k] * m[k];
            out.grad += coef_[j][k] * g[k];
        }
        return out;
    }

    double value(int j, Vec2 x) const {
        auto m = monomials(x);
        double s = 0.0;
        for (int k = 0; k < 6; ++k) s += coef_[j][k] * m[k];
        return s;
    }

    Vec2 gradient(int j, Vec2 x) const {
        auto g = monomial_grads(x);
        Vec2 s{0.0, 0.0};
        for (int k = 0; k < 6; ++k) s += coef_[j][k] * g[k];
        return s;
    }

    // constant per triangle for P2
    Hess hessian(int j) const {
        const double s2 = 1.0 / (scale_ * scale_);
        return {2.0 * coef_[j][3] * s2, coef_[j][4] * s2, 2.0 * coef_[j][5] * s2};
    }

    const std::array<Vec2, 3>& vertices() const { return verts_; }

    // barycentric coordinates of x
    std::array<double, 3> barycentric(Vec2 x) const {
        double a = triangle_area(verts_[0], verts_[1], verts_[2]);
        return {triangle_area(x, verts_[1], verts_[2]) / a,
                triangle_area(verts_[0], x, verts_[2]) / a,
                triangle_area(verts_[0], verts_[1], x) / a};
    }

private:
    std::array<double, 6> monomials(Vec2 x) const {
        double X = (x.x - center_.x) / scale_;
        double Y = (x.y - center_.y) / scale_;
        return {1.0, X, Y, X * X, X * Y, Y * Y};
    }

    std::array<Vec2, 6> monomial_grads(Vec2 x) const {
        double X = (x.x - center_.x) / scale_;
        double Y = (x.y - center_.y) / scale_;
        double s = 1.0 / scale_;
        return {Vec2{0, 0},         Vec2{s, 0},         Vec2{0, s},
                Vec2{2 * X * s, 0}, Vec2{Y * s, X * s}, Vec2{0, 2 * Y * s}};
    }

    std::array<Vec2, 3> verts_;
    Vec2 center_;
    double scale_ = 1.0;
    double coef_[6][6] = {};
};

constexpr int kEliminated = -1;

class Space {
public:
    SpaceKind kind;
    const Mesh* mesh = nullptr;
    int ndof = 0;
    // per triangle: global index of local basis 0..5, kEliminated for
    // constrained boundary dofs
    std::vector<std::array<int, 6>> cell_dofs;
    std::vector<LocalBasis> local;

    const LocalBasis& basis(int t) const { return local[t]; }

    // u_h(x) for x in triangle t
    double evaluate(int t, const Vector& u, Vec2 x) const {
        double s = 0.0;
        for (int j = 0; j < 6; ++j) {
            int g = cell_dofs[t][j];
            if (g >= 0) s += u[g] * local[t].value(j, x);
        }
        return s;
    }

    Vec2 evaluate_gradient(int t, const Vector& u, Vec2 x) const {
        Vec2 s{0.0, 0.0};
        for (int j = 0; j < 6; ++j) {
            int g = cell_dofs[t][j];
            if (g >= 0) s += u[g] * local[t].gradient(j, x);
        }
        return s;
    }

    Hess evaluate_hessian(int t, const Vector& u) const {
        Hess s{};
        for (int j = 0; j < 6; ++j) {
            int g = cell_dofs[t][j];
            if (g >= 0) s = s + local[t].hessian(j) * u[g];
        }
        return s;
    }
};

namespace detail {

// Deterministic dof order swept by (y, x) of the owning entity; keeps the
// matrix bandwidth small for the structured meshes.
struct EntityKey {
    double y, x;
    bool is_edge;
    int index;
    bool operator<(const EntityKey& o) const {
        if (y != o.y) return y < o.y;
        if (x != o.x) return x < o.x;
        if (is_edge != o.is_edge) return !is_edge;
        return index < o.index;
    }
};

} // namespace detail

inline Space build_space(const Mesh& mesh, SpaceKind kind) {
    Space sp;
    sp.kind = kind;
    sp.mesh = &mesh;
    const int F = mesh.num_triangles();

    sp.local.reserve(F);
    for (int t = 0; t < F; ++t) {
        std::array<Vec2, 3> nrm{};
        for (int i = 0; i < 3; ++i) nrm[i] = mesh.edges[mesh.tri_edges[t][i]].normal;
        sp.local.push_back(LocalBasis::build(kind, mesh.triangle_vertices(t), nrm));
    }

    sp.cell_dofs.assign(F, {kEliminated, kEliminated, kEliminated, kEliminated, kEliminated, kEliminated});

    if (kind == SpaceKind::dg) {
        sp.ndof = 6 * F;
        for (int t = 0; t < F; ++t)
            for (int j = 0; j < 6; ++j) sp.cell_dofs[t][j] = 6 * t + j;
        return sp;
    }

    // Morley and C0IP share the entity layout: one dof per interior vertex
    // and one per interior edge (mean normal derivative vs midpoint value).
    std::vector<detail::EntityKey> keys;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!mesh.vertex_on_boundary[v])
            keys.push_back({mesh.vertices[v].y, mesh.vertices[v].x, false, v});
    for (int e = 0; e < mesh.num_edges(); ++e)
        if (!mesh.edges[e].on_boundary())
            keys.push_back({mesh.edges[e].midpoint.y, mesh.edges[e].midpoint.x, true, e});
    std::sort(keys.begin(), keys.end());

    std::vector<int> vertex_dof(mesh.num_vertices(), kEliminated);
    std::vector<int> edge_dof(mesh.num_edges(), kEliminated);
    int next = 0;
    for (const auto& k : keys)
        (k.is_edge ? edge_dof[k.index] : vertex_dof[k.index]) = next++;
    sp.ndof = next;

    for (int t = 0; t < F; ++t) {
        for (int i = 0; i < 3; ++i) {
            sp.cell_dofs[t][i] = vertex_dof[mesh.triangles[t][i]];
            sp.cell_dofs[t][3 + i] = edge_dof[mesh.tri_edges[t][i]];
        }
    }
    return sp;
}

// Values, gradients and Hessians of the 6 local basis functions of triangle t
// at the given points (which must lie in the closed triangle, up to tol).
inline std::vector<std::array<BasisEval, 6>> eval_basis(const Space& space, int t,
                                                        const std::vector<Vec2>& points,
                                                        double tol = 1e-10) {
    const LocalBasis& lb = space.basis(t);
    std::vector<std::array<BasisEval, 6>> out;
    out.reserve(points.size());
    for (Vec2 x : points) {
        auto l = lb.barycentric(x);
        if (l[0] < -tol || l[1] < -tol || l[2] < -tol)
            throw std::invalid_argument("eval_basis: point outside triangle");
        std::array<BasisEval, 6> row;
        for (int j = 0; j < 6; ++j) row[j] = lb.eval(j, x);
        out.push_back(row);
    }
    return out;
}

} // namespace biharm
