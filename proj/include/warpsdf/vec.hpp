#pragma once

#include "warpsdf/dual.hpp"

namespace warpsdf {

template <class S>
struct Vec2 {
    S x{}, y{};

    Vec2() = default;
    Vec2(S x_, S y_) : x(std::move(x_)), y(std::move(y_)) {}
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
};

template <class S>
struct Vec3 {
    S x{}, y{}, z{};

    Vec3() = default;
    Vec3(S x_, S y_, S z_) : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}

    S& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    const S& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
};

template <class S> Vec2<S> operator+(const Vec2<S>& a, const Vec2<S>& b) { return {a.x + b.x, a.y + b.y}; }
template <class S> Vec2<S> operator-(const Vec2<S>& a, const Vec2<S>& b) { return {a.x - b.x, a.y - b.y}; }
template <class S> Vec2<S> operator-(const Vec2<S>& a) { return {-a.x, -a.y}; }
template <class S> Vec2<S> operator*(const Vec2<S>& a, const S& s) { return {a.x * s, a.y * s}; }
template <class S> Vec2<S> operator*(const S& s, const Vec2<S>& a) { return a * s; }
template <class S, class = std::enable_if_t<!std::is_same_v<S, double>>>
Vec2<S> operator*(const Vec2<S>& a, double s) { return {a.x * s, a.y * s}; }
template <class S, class = std::enable_if_t<!std::is_same_v<S, double>>>
Vec2<S> operator*(double s, const Vec2<S>& a) { return a * s; }

template <class S> S dot(const Vec2<S>& a, const Vec2<S>& b) { return a.x * b.x + a.y * b.y; }

template <class S> Vec3<S> operator+(const Vec3<S>& a, const Vec3<S>& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
template <class S> Vec3<S> operator-(const Vec3<S>& a, const Vec3<S>& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
template <class S> Vec3<S> operator-(const Vec3<S>& a) { return {-a.x, -a.y, -a.z}; }
template <class S> Vec3<S> operator*(const Vec3<S>& a, const S& s) { return {a.x * s, a.y * s, a.z * s}; }
template <class S> Vec3<S> operator*(const S& s, const Vec3<S>& a) { return a * s; }
template <class S> Vec3<S> operator/(const Vec3<S>& a, const S& s) { return {a.x / s, a.y / s, a.z / s}; }
template <class S, class = std::enable_if_t<!std::is_same_v<S, double>>>
Vec3<S> operator*(const Vec3<S>& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
template <class S, class = std::enable_if_t<!std::is_same_v<S, double>>>
Vec3<S> operator*(double s, const Vec3<S>& a) { return a * s; }
template <class S, class = std::enable_if_t<!std::is_same_v<S, double>>>
Vec3<S> operator/(const Vec3<S>& a, double s) { return a * (1.0 / s); }

template <class S>
S dot(const Vec3<S>& a, const Vec3<S>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

template <class S>
Vec3<S> cross(const Vec3<S>& a, const Vec3<S>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class S> S length(const Vec3<S>& a) { return sqrt(dot(a, a)); }
template <class S> S length(const Vec2<S>& a) { return sqrt(dot(a, a)); }
template <class S> Vec3<S> normalize(const Vec3<S>& a) { return a / length(a); }

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;

// Promote a plain vector to scalar type S (constants, zero tangents).
template <class S>
Vec3<S> to_vec(const Vec3d& a) { return {S(a.x), S(a.y), S(a.z)}; }
template <class S>
Vec2<S> to_vec(const Vec2d& a) { return {S(a.x), S(a.y)}; }

// Fully collapse to doubles at any nesting depth.
template <class S>
Vec3d scalar_vec(const Vec3<S>& a) { return {scalar_value(a.x), scalar_value(a.y), scalar_value(a.z)}; }
template <class S>
Vec2d scalar_vec(const Vec2<S>& a) { return {scalar_value(a.x), scalar_value(a.y)}; }

} // namespace warpsdf
