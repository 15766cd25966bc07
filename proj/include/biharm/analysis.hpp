#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "biharm/fields.hpp"
#include "biharm/forms.hpp"
#include "biharm/spaces.hpp"

namespace biharm {

// ---------------------------------------------------------------------------
// Errors against an analytic solution. Error integrands contain the analytic
// solution, so elements use a degree-6 rule rather than the exact P2 rules.

inline double l2_error(const Space& space, const Vector& u, const ScalarField& exact) {
    const Mesh& mesh = *space.mesh;
    const TriRule& rule = tri_rule_deg6();
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto v = mesh.triangle_vertices(t);
        const double area = mesh.triangle_area(t);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            Vec2 x = rule.map(v, static_cast<int>(q));
            double d = exact.value(x) - space.evaluate(t, u, x);
            s += area * rule.points[q].w * d * d;
        }
    }
    return std::sqrt(s);
}

// Scheme energy norm of the error: broken H2 seminorm plus, for dG/C0IP, the
// penalty seminorm. The exact solution is clamped, so its jumps vanish and
// the penalty part reduces to c(u_h, u_h); callers pass the assembled penalty
// matrix (or nothing for Morley).
inline double energy_error(const Space& space, const Vector& u, const ScalarField& exact,
                           const SparseMatrix* penalty = nullptr) {
    const Mesh& mesh = *space.mesh;
    const TriRule& rule = tri_rule_deg6();
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto v = mesh.triangle_vertices(t);
        const double area = mesh.triangle_area(t);
        Hess hh = space.evaluate_hessian(t, u);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            Vec2 x = rule.map(v, static_cast<int>(q));
            Hess d = exact.hess(x) - hh;
            s += area * rule.points[q].w * frob(d, d);
        }
    }
    if (penalty) s += penalty->quadratic_form(u);
    return std::sqrt(s);
}

inline double energy_error(const Space& space, const FormParams& params, const Vector& u,
                           const ScalarField& exact) {
    if (space.kind == SpaceKind::morley) return energy_error(space, u, exact, nullptr);
    SparseMatrix c = assemble_penalty(space, params);
    return energy_error(space, u, exact, &c);
}

// ---------------------------------------------------------------------------
// Convergence tables

struct ErrorRecord {
    double h = 0.0;
    double k = 0.0;
    double l2 = 0.0;     // max over time steps
    double energy = 0.0; // max over time steps, scheme norm
    std::string norm_label;
};

struct RateRow {
    ErrorRecord record;
    std::optional<double> l2_rate;
    std::optional<double> energy_rate;
};

struct RateTable {
    std::vector<RateRow> rows;
};

inline RateTable convergence_rates(const std::vector<ErrorRecord>& records) {
    RateTable table;
    for (std::size_t i = 0; i < records.size(); ++i) {
        RateRow row{records[i], std::nullopt, std::nullopt};
        if (i > 0) {
            const ErrorRecord& prev = records[i - 1];
            const ErrorRecord& cur = records[i];
            double dh = std::log(prev.h / cur.h);
            auto rate = [dh](double e_prev, double e_cur) -> std::optional<double> {
                if (e_prev <= 0.0 || e_cur <= 0.0 || dh == 0.0) return std::nullopt; // undefined
                return std::log(e_prev / e_cur) / dh;
            };
            row.l2_rate = rate(prev.l2, cur.l2);
            row.energy_rate = rate(prev.energy, cur.energy);
        }
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Sensor functional: integral of u_h over an axis-aligned rectangle. Each
// triangle is clipped against the rectangle (Sutherland-Hodgman), the clip
// polygon fan-triangulated, and u_h integrated exactly on the pieces.

namespace detail {

using Polygon = std::vector<Vec2>;

inline Polygon clip_halfplane(const Polygon& poly, auto inside, auto intersect) {
    Polygon out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 cur = poly[i];
        Vec2 nxt = poly[(i + 1) % n];
        bool cin = inside(cur), nin = inside(nxt);
        if (cin) out.push_back(cur);
        if (cin != nin) out.push_back(intersect(cur, nxt));
    }
    return out;
}

inline Polygon clip_to_rect(Polygon poly, const Rect& r) {
    auto ix = [](Vec2 a, Vec2 b, double x) {
        double t = (x - a.x) / (b.x - a.x);
        return Vec2{x, a.y + t * (b.y - a.y)};
    };
    auto iy = [](Vec2 a, Vec2 b, double y) {
        double t = (y - a.y) / (b.y - a.y);
        return Vec2{a.x + t * (b.x - a.x), y};
    };
    poly = clip_halfplane(poly, [&](Vec2 p) { return p.x >= r.x0; },
                          [&](Vec2 a, Vec2 b) { return ix(a, b, r.x0); });
    if (poly.empty()) return poly;
    poly = clip_halfplane(poly, [&](Vec2 p) { return p.x <= r.x1; },
                          [&](Vec2 a, Vec2 b) { return ix(a, b, r.x1); });
    if (poly.empty()) return poly;
    poly = clip_halfplane(poly, [&](Vec2 p) { return p.y >= r.y0; },
                          [&](Vec2 a, Vec2 b) { return iy(a, b, r.y0); });
    if (poly.empty()) return poly;
    poly = clip_halfplane(poly, [&](Vec2 p) { return p.y <= r.y1; },
                          [&](Vec2 a, Vec2 b) { return iy(a, b, r.y1); });
    return poly;
}

} // namespace detail

// Linear functionals s_i = int_{K cap region} phi_i dx assembled as a global
// vector, so a sensor reading is the dot product s . U.
inline Vector sensor_vector(const Space& space, const Rect& region) {
    const Mesh& mesh = *space.mesh;
    Vector s(space.ndof, 0.0);
    const TriRule& rule = tri_rule_deg4();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        auto v = mesh.triangle_vertices(t);
        detail::Polygon poly = detail::clip_to_rect({v[0], v[1], v[2]}, region);
        if (poly.size() < 3) continue;
        for (std::size_t p = 1; p + 1 < poly.size(); ++p) {
            std::array<Vec2, 3> sub{poly[0], poly[p], poly[p + 1]};
            double area = triangle_area(sub[0], sub[1], sub[2]);
            if (area <= 0.0) continue;
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                Vec2 x = rule.map(sub, static_cast<int>(q));
                double w = area * rule.points[q].w;
                for (int j = 0; j < 6; ++j) {
                    int dof = space.cell_dofs[t][j];
                    if (dof >= 0) s[dof] += w * space.basis(t).value(j, x);
                }
            }
        }
    }
    return s;
}

inline double sensor_integral(const Space& space, const Vector& u, const Rect& region) {
    return dot(sensor_vector(space, region), u);
}

// ---------------------------------------------------------------------------
// Per-step error tracking for separable exact solutions u(x,t) = tau(t) g(x).
// Expanding || tau g - u_h ||^2 reduces each sample to sparse algebra:
//   L2:     tau^2 (g,g) - 2 tau b.U + U'MU        b_i = (g, phi_i)
//   energy: tau^2 |g|^2 - 2 tau G.U + U'(A_pw+C)U  G_i = (D2 g, D2 phi_i)
// with every piece computed by the same degree-6 rule as the direct path.

class SeparableErrorTracker {
public:
    SeparableErrorTracker(const Space& space, const FormParams& params, const SeparableField& exact)
        : time_factor_(exact.time_factor) {
        const Mesh& mesh = *space.mesh;
        const TriRule& rule = tri_rule_deg6();
        b_.assign(space.ndof, 0.0);
        hess_pair_.assign(space.ndof, 0.0);
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            auto v = mesh.triangle_vertices(t);
            double area = mesh.triangle_area(t);
            Hess havg{};
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                Vec2 x = rule.map(v, static_cast<int>(q));
                double w = area * rule.points[q].w;
                double g = exact.spatial.value(x);
                Hess hg = exact.spatial.hess(x);
                g_norm2_ += w * g * g;
                hess_norm2_ += w * frob(hg, hg);
                havg = havg + hg * rule.points[q].w;
                for (int j = 0; j < 6; ++j) {
                    int dof = space.cell_dofs[t][j];
                    if (dof >= 0) b_[dof] += w * g * space.basis(t).value(j, x);
                }
            }
            for (int j = 0; j < 6; ++j) {
                int dof = space.cell_dofs[t][j];
                if (dof >= 0)
                    hess_pair_[dof] += area * frob(havg, space.basis(t).hessian(j));
            }
        }
        mass_ = assemble_mass(space);
        energy_mat_ = assemble_apw(space); // unweighted broken H2 gram
        if (space.kind != SpaceKind::morley)
            energy_mat_ = energy_mat_.add_scaled(assemble_penalty(space, params), 1.0);
    }

    double l2(const Vector& u, double t) const {
        double tau = time_factor_(t);
        double s = tau * tau * g_norm2_ - 2.0 * tau * dot(b_, u) + mass_.quadratic_form(u);
        return std::sqrt(std::max(0.0, s));
    }

    double energy(const Vector& u, double t) const {
        double tau = time_factor_(t);
        double s = tau * tau * hess_norm2_ - 2.0 * tau * dot(hess_pair_, u) +
                   energy_mat_.quadratic_form(u);
        return std::sqrt(std::max(0.0, s));
    }

private:
    std::function<double(double)> time_factor_;
    Vector b_;
    Vector hess_pair_;
    double g_norm2_ = 0.0;
    double hess_norm2_ = 0.0;
    SparseMatrix mass_;
    SparseMatrix energy_mat_;
};

} // namespace biharm
