#pragma once

#include <cmath>

#include "curvelab/grid.hpp"

namespace curvelab {

// Space-time vectors (x1, x2, t).
struct Vec3 {
    double x = 0.0, y = 0.0, t = 0.0;
    Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, t + o.t}; }
    Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, t - o.t}; }
    Vec3 operator*(double s) const { return {x * s, y * s, t * s}; }
    double dot(Vec3 o) const { return x * o.x + y * o.y + t * o.t; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0 ? Vec3{x / n, y / n, t / n} : Vec3{};
    }
    Vec3 cross(Vec3 o) const {
        return {y * o.t - t * o.y, t * o.x - x * o.t, x * o.y - y * o.x};
    }
    Vec2 spatial() const { return {x, y}; }
};

// Unoriented angle between a direction and a line (1D subspace).
inline double angle_to_line(Vec3 u, Vec3 v) {
    double c = std::abs(u.normalized().dot(v.normalized()));
    return std::acos(std::min(1.0, c));
}

// Angle between two direction vectors, in [0, pi/2] via |cos|.
inline double angle_between_lines(Vec3 u, Vec3 v) { return angle_to_line(u, v); }

} // namespace curvelab
