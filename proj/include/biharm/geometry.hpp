#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace biharm {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Rotate by -90 degrees; for a CCW triangle this turns an oriented boundary
// edge direction into the outward normal.
inline Vec2 perp(Vec2 a) { return {a.y, -a.x}; }

// Symmetric 2x2 matrix, used for Hessians of P2 functions.
struct Hess {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    Hess operator+(const Hess& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
    Hess operator-(const Hess& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
    Hess operator*(double s) const { return {xx * s, xy * s, yy * s}; }
};

// Frobenius inner product A : B (the off-diagonal entry counts twice).
inline double frob(const Hess& a, const Hess& b) {
    return a.xx * b.xx + 2.0 * a.xy * b.xy + a.yy * b.yy;
}

// H n for a unit normal n.
inline Vec2 apply(const Hess& h, Vec2 n) {
    return {h.xx * n.x + h.xy * n.y, h.xy * n.x + h.yy * n.y};
}

inline double triangle_area(Vec2 a, Vec2 b, Vec2 c) {
    return 0.5 * cross(b - a, c - a);
}

// Dense solve of a small n x n system with partial pivoting, in place.
// A is row-major n*n, b holds nrhs right-hand sides of length n (column j of
// the solution ends up in b[j*n..j*n+n)).
template <int N>
inline void solve_dense(std::array<double, N * N>& A, double* b, int nrhs) {
    std::array<int, N> piv{};
    for (int i = 0; i < N; ++i) piv[i] = i;
    for (int k = 0; k < N; ++k) {
        int p = k;
        double best = std::abs(A[k * N + k]);
        for (int i = k + 1; i < N; ++i) {
            double v = std::abs(A[i * N + k]);
            if (v > best) { best = v; p = i; }
        }
        if (best == 0.0) throw std::runtime_error("solve_dense: singular matrix");
        if (p != k) {
            for (int j = 0; j < N; ++j) std::swap(A[k * N + j], A[p * N + j]);
            for (int r = 0; r < nrhs; ++r) std::swap(b[r * N + k], b[r * N + p]);
        }
        for (int i = k + 1; i < N; ++i) {
            double f = A[i * N + k] / A[k * N + k];
            A[i * N + k] = 0.0;
            for (int j = k + 1; j < N; ++j) A[i * N + j] -= f * A[k * N + j];
            for (int r = 0; r < nrhs; ++r) b[r * N + i] -= f * b[r * N + k];
        }
    }
    for (int r = 0; r < nrhs; ++r) {
        for (int i = N - 1; i >= 0; --i) {
            double s = b[r * N + i];
            for (int j = i + 1; j < N; ++j) s -= A[i * N + j] * b[r * N + j];
            b[r * N + i] = s / A[i * N + i];
        }
    }
}

} // namespace biharm
