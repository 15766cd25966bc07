#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "biharm/geometry.hpp"

namespace biharm {

// Triangle rule in barycentric coordinates; weights sum to 1, so a physical
// integral is |K| * sum_q w_q f(x_q).
struct TriRule {
    struct Point {
        double l0, l1, l2, w;
    };
    std::vector<Point> points;
    int degree = 0;

    Vec2 map(const std::array<Vec2, 3>& v, int q) const {
        const Point& p = points[q];
        return v[0] * p.l0 + v[1] * p.l1 + v[2] * p.l2;
    }
};

// Edge rule on the unit parameter interval [0,1]; weights sum to 1, so an
// edge integral is h_e * sum_q w_q f(a + t_q (b - a)).
struct EdgeRule {
    struct Point {
        double t, w;
    };
    std::vector<Point> points;
    int degree = 0;
};

// Classic 6-point rule, exact for polynomials up to degree 4.
inline const TriRule& tri_rule_deg4() {
    static const TriRule rule = [] {
        TriRule r;
        r.degree = 4;
        const double a1 = 0.445948490915965, w1 = 0.223381589678011;
        const double a2 = 0.091576213509771, w2 = 0.109951743655322;
        for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
            r.points.push_back({1.0 - 2.0 * a, a, a, w});
            r.points.push_back({a, 1.0 - 2.0 * a, a, w});
            r.points.push_back({a, a, 1.0 - 2.0 * a, w});
        }
        return r;
    }();
    return rule;
}

// 12-point rule, exact up to degree 6.
inline const TriRule& tri_rule_deg6() {
    static const TriRule rule = [] {
        TriRule r;
        r.degree = 6;
        const double a1 = 0.063089014491502, w1 = 0.050844906370207;
        const double a2 = 0.249286745170910, w2 = 0.116786275726379;
        for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
            r.points.push_back({1.0 - 2.0 * a, a, a, w});
            r.points.push_back({a, 1.0 - 2.0 * a, a, w});
            r.points.push_back({a, a, 1.0 - 2.0 * a, w});
        }
        const double b = 0.053145049844816, c = 0.310352451033785;
        const double w3 = 0.082851075618374;
        const double perms[6][2] = {{b, c}, {c, b}, {b, 1 - b - c}, {c, 1 - b - c},
                                    {1 - b - c, b}, {1 - b - c, c}};
        for (auto& p : perms) r.points.push_back({1.0 - p[0] - p[1], p[0], p[1], w3});
        return r;
    }();
    return rule;
}

// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
inline EdgeRule gauss_legendre_01(int n) {
    EdgeRule r;
    r.degree = 2 * n - 1;
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5)); // initial guess on [-1,1]
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.points.push_back({0.5 * (1.0 + x), 0.5 * w});
    }
    return r;
}

inline const EdgeRule& edge_rule_2() {
    static const EdgeRule r = [] {
        EdgeRule e;
        e.degree = 3;
        const double s = 0.5 / std::sqrt(3.0);
        e.points = {{0.5 - s, 0.5}, {0.5 + s, 0.5}};
        return e;
    }();
    return r;
}

inline const EdgeRule& edge_rule_3() {
    static const EdgeRule r = [] {
        EdgeRule e;
        e.degree = 5;
        const double s = 0.5 * std::sqrt(0.6);
        e.points = {{0.5 - s, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + s, 5.0 / 18.0}};
        return e;
    }();
    return r;
}

// Collapsed tensor-product rule on the triangle (Duffy transform of an
// m x m Gauss grid); exact for total degree <= 2m - 2.
inline TriRule tri_rule_duffy(int m) {
    EdgeRule g = gauss_legendre_01(m);
    TriRule r;
    r.degree = 2 * m - 2;
    for (const auto& pu : g.points) {
        for (const auto& pv : g.points) {
            double x = pu.t;
            double y = pv.t * (1.0 - pu.t);
            double w = pu.w * pv.w * (1.0 - pu.t); // jacobian of the collapse
            // these raw weights sum to 1/2 (the reference area); rescale to 1
            r.points.push_back({1.0 - x - y, x, y, 2.0 * w});
        }
    }
    return r;
}

inline TriRule tri_rule_for_degree(int degree) {
    if (degree <= 4) return tri_rule_deg4();
    if (degree <= 6) return tri_rule_deg6();
    int m = (degree + 3) / 2; // smallest m with 2m - 2 >= degree
    return tri_rule_duffy(m);
}

} // namespace biharm
