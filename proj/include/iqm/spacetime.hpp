// spacetime.hpp
// Small geometric value types: 3-vectors, space-time coordinates of marks,
// axis-aligned space-time boxes (half-open, [lo, hi)), and the extent record
// attached to generation operations and tree branches.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace iqm {

// Sentinel half-width for boxes that are unbounded along an axis.
inline constexpr double kUnbounded = 1e30;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
    friend Vec3 operator*(const Vec3& v, double s) { return s * v; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{0.0, 0.0, 1.0};
    }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

// Angle between two directions, in radians.
inline double angle_between(const Vec3& a, const Vec3& b) {
    double c = a.normalized().dot(b.normalized());
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return std::acos(c);
}

struct SpaceTimeCoord {
    double x = 0.0, y = 0.0, z = 0.0, t = 0.0;

    double component(std::size_t axis) const {
        switch (axis) {
            case 0: return x;
            case 1: return y;
            case 2: return z;
            default: return t;
        }
    }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(t);
    }
};

// Axis-aligned box over (x, y, z, t); membership is half-open so adjacent
// bins sharing an edge stay disjoint.
struct SpaceTimeBox {
    std::array<double, 4> lo{-kUnbounded, -kUnbounded, -kUnbounded, -kUnbounded};
    std::array<double, 4> hi{kUnbounded, kUnbounded, kUnbounded, kUnbounded};

    static SpaceTimeBox everywhere() { return {}; }

    SpaceTimeBox& clamp_axis(std::size_t axis, double a, double b) {
        lo[axis] = a;
        hi[axis] = b;
        return *this;
    }

    bool valid() const {
        for (std::size_t k = 0; k < 4; ++k)
            if (!(lo[k] <= hi[k])) return false;
        return true;
    }

    bool contains(const SpaceTimeCoord& c) const {
        for (std::size_t k = 0; k < 4; ++k) {
            double v = c.component(k);
            if (v < lo[k] || v >= hi[k]) return false;
        }
        return true;
    }

    bool intersects(const SpaceTimeBox& o) const {
        for (std::size_t k = 0; k < 4; ++k)
            if (!(lo[k] < o.hi[k] && o.lo[k] < hi[k])) return false;
        return true;
    }
};

// Spatial extent and duration of a physical operation; bookkeeping only, no
// geometry is derived from it.
struct SpaceTimeSupport {
    double spatial_extent = 0.0;
    double duration = 0.0;

    bool valid() const {
        return spatial_extent >= 0.0 && duration >= 0.0 &&
               std::isfinite(spatial_extent) && std::isfinite(duration);
    }
};

}  // namespace iqm
