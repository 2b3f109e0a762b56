#pragma once

#include <cmath>

namespace kinflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }

/// Point of the phase space R^2_x x R^2_v.
struct PhasePoint {
    Vec2 x;
    Vec2 v;
};

inline double phase_dist(const PhasePoint& a, const PhasePoint& b) {
    return std::sqrt(norm2(a.x - b.x) + norm2(a.v - b.v));
}

/// 2x2 matrix, row major.  Used for velocity gradients of force fields.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    constexpr double trace() const { return a11 + a22; }

    /// Spectral norm.  For the rank-one matrices produced by grad_v this is
    /// exact; in general it is the largest singular value.
    double op_norm() const {
        const double g11 = a11 * a11 + a21 * a21;
        const double g12 = a11 * a12 + a21 * a22;
        const double g22 = a12 * a12 + a22 * a22;
        const double mean = 0.5 * (g11 + g22);
        const double disc = std::sqrt(std::max(0.0, mean * mean - (g11 * g22 - g12 * g12)));
        return std::sqrt(std::max(0.0, mean + disc));
    }
};

constexpr Mat2 operator-(Mat2 a, Mat2 b) {
    return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
}

} // namespace kinflow
