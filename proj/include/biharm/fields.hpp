#pragma once

#include <functional>
#include <stdexcept>

#include "biharm/geometry.hpp"
#include "biharm/mesh.hpp"

namespace biharm {

// Scalar function of space; the derivative callables are optional and only
// required by the operations that consume them (interpolation needs the
// gradient, energy errors the Hessian, the Ritz projection of analytic data
// the bilaplacian).
struct ScalarField {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> gradient;
    std::function<Hess(Vec2)> hessian;
    std::function<double(Vec2)> bilaplacian;

    double operator()(Vec2 x) const { return value(x); }

    Vec2 grad(Vec2 x) const {
        if (!gradient) throw std::logic_error("ScalarField: gradient not provided");
        return gradient(x);
    }

    Hess hess(Vec2 x) const {
        if (!hessian) throw std::logic_error("ScalarField: hessian not provided");
        return hessian(x);
    }

    static ScalarField zero() {
        return {[](Vec2) { return 0.0; }, [](Vec2) { return Vec2{}; },
                [](Vec2) { return Hess{}; }, [](Vec2) { return 0.0; }};
    }

    static ScalarField constant(double c) {
        return {[c](Vec2) { return c; }, [](Vec2) { return Vec2{}; },
                [](Vec2) { return Hess{}; }, [](Vec2) { return 0.0; }};
    }
};

using TimeField = std::function<double(Vec2, double)>;

// Time-separable part of a problem description: g(x, t) = tau(t) * s(x).
struct SeparableField {
    std::function<double(double)> time_factor;
    ScalarField spatial;

    double operator()(Vec2 x, double t) const { return time_factor(t) * spatial.value(x); }
};

// One experiment: domain, coefficient, initial data, forcing, and (when a
// closed-form solution exists) the exact solution for error measurement.
struct Problem {
    std::string name;
    Rect domain;
    double T = 1.0;
    std::function<double(Vec2)> coefficient; // null means c == 1
    ScalarField u0;                          // value + gradient + hessian
    ScalarField v0;                          // value is enough
    bool forcing_is_zero = false;
    SeparableField forcing;     // f(x,t), separable for all built-in problems
    bool has_exact = false;
    SeparableField exact;       // u(x,t); spatial carries gradient + hessian
};

} // namespace biharm
