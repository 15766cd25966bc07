#pragma once

#include <cmath>

#include "biharm/fields.hpp"

namespace biharm {

// Factored helpers for tensor-product data u(x,t) = tau(t) p(x1) p(x2).
namespace detail {

struct Poly1d {
    double v, d1, d2, d4;
};

// p(s) = s^2 (s-1)^2
inline Poly1d bubble4(double s) {
    double v = s * s * (s - 1.0) * (s - 1.0);
    double d1 = 4.0 * s * s * s - 6.0 * s * s + 2.0 * s;
    double d2 = 12.0 * s * s - 12.0 * s + 2.0;
    return {v, d1, d2, 24.0};
}

// phi(s) = exp(-100 s^2) (1 - s^2)^2
inline Poly1d gauss_bump(double s) {
    double a = std::exp(-100.0 * s * s);
    double a1 = -200.0 * s * a;
    double a2 = (40000.0 * s * s - 200.0) * a;
    double a3 = (120000.0 * s - 8.0e6 * s * s * s) * a;
    double a4 = (120000.0 - 4.8e7 * s * s + 1.6e9 * s * s * s * s) * a;
    double q = 1.0 - s * s;
    double b = q * q;
    double b1 = -4.0 * s * q;
    double b2 = 12.0 * s * s - 4.0;
    double b3 = 24.0 * s;
    return {a * b, a1 * b + a * b1, a2 * b + 2.0 * a1 * b1 + a * b2,
            a4 * b + 4.0 * a3 * b1 + 6.0 * a2 * b2 + 4.0 * a1 * b3 + 24.0 * a};
}

// s(x) = sin^2(pi x)
inline Poly1d sine_sq(double x) {
    double s = std::sin(M_PI * x);
    double c = std::cos(M_PI * x);
    double pi2 = M_PI * M_PI;
    return {s * s, M_PI * std::sin(2.0 * M_PI * x), 2.0 * pi2 * (c * c - s * s),
            -8.0 * pi2 * pi2 * std::cos(2.0 * M_PI * x)};
}

template <typename P>
ScalarField tensor_field(P p, double scale = 1.0) {
    return {
        [p, scale](Vec2 x) { return scale * p(x.x).v * p(x.y).v; },
        [p, scale](Vec2 x) {
            auto px = p(x.x);
            auto py = p(x.y);
            return Vec2{scale * px.d1 * py.v, scale * px.v * py.d1};
        },
        [p, scale](Vec2 x) {
            auto px = p(x.x);
            auto py = p(x.y);
            return Hess{scale * px.d2 * py.v, scale * px.d1 * py.d1, scale * px.v * py.d2};
        },
        [p, scale](Vec2 x) {
            auto px = p(x.x);
            auto py = p(x.y);
            return scale * (px.d4 * py.v + 2.0 * px.d2 * py.d2 + px.v * py.d4);
        }};
}

} // namespace detail

// Manufactured smooth solution u = exp(-t) (x1(x1-1) x2(x2-1))^2 on the unit
// square; f = u_tt + Lap^2 u in closed form.
inline Problem make_example1() {
    Problem p;
    p.name = "example1";
    p.domain = {0.0, 0.0, 1.0, 1.0};
    p.T = 1.0;
    auto g = detail::tensor_field(detail::bubble4);
    p.u0 = g;
    p.v0 = detail::tensor_field(detail::bubble4, -1.0);
    p.has_exact = true;
    p.exact = {[](double t) { return std::exp(-t); }, g};
    p.forcing = {[](double t) { return std::exp(-t); },
                 ScalarField{[](Vec2 x) {
                     auto px = detail::bubble4(x.x);
                     auto py = detail::bubble4(x.y);
                     // u_tt + biharmonic: p q + p'''' q + 2 p'' q'' + p q''''
                     return px.v * py.v + 24.0 * py.v + 2.0 * px.d2 * py.d2 + 24.0 * px.v;
                 }}};
    return p;
}

// Heterogeneous plate: regularized impulse, no forcing, stiffness jump at
// x2 = 0.2.
inline Problem make_example2() {
    Problem p;
    p.name = "example2";
    p.domain = {-1.0, -1.0, 1.0, 1.0};
    p.T = 0.03;
    p.coefficient = [](Vec2 x) { return x.y < 0.2 ? 1.0 : 9.0; };
    p.u0 = detail::tensor_field(detail::gauss_bump, 0.2);
    p.v0 = ScalarField::zero();
    p.forcing_is_zero = true;
    return p;
}

// A second manufactured solution, u = cos(t) sin^2(pi x1) sin^2(pi x2).
inline Problem make_trig() {
    Problem p;
    p.name = "trig";
    p.domain = {0.0, 0.0, 1.0, 1.0};
    p.T = 1.0;
    auto g = detail::tensor_field(detail::sine_sq);
    p.u0 = g;
    p.v0 = ScalarField::zero();
    p.has_exact = true;
    p.exact = {[](double t) { return std::cos(t); }, g};
    const double pi4 = M_PI * M_PI * M_PI * M_PI;
    p.forcing = {[](double t) { return std::cos(t); },
                 ScalarField{[pi4](Vec2 x) {
                     auto sx = detail::sine_sq(x.x);
                     auto sy = detail::sine_sq(x.y);
                     double s4x = -8.0 * pi4 * std::cos(2.0 * M_PI * x.x);
                     double s4y = -8.0 * pi4 * std::cos(2.0 * M_PI * x.y);
                     return -sx.v * sy.v + s4x * sy.v + 2.0 * sx.d2 * sy.d2 + sx.v * s4y;
                 }}};
    return p;
}

inline Problem make_problem(const std::string& name) {
    if (name == "example1") return make_example1();
    if (name == "example2") return make_example2();
    if (name == "trig") return make_trig();
    throw std::invalid_argument("unknown problem: " + name);
}

// control region of the sensor experiment
inline Rect sensor_region(double lc = 1.0 / 32.0) {
    return {0.75 - lc, -lc, 0.75 + lc, lc};
}

} // namespace biharm
