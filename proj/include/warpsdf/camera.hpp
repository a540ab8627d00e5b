#pragma once

#include "warpsdf/errors.hpp"
#include "warpsdf/vec.hpp"

namespace warpsdf {

template <class S>
struct RayT {
    Vec3<S> o, d; // d normalized
    Vec2<S> u;    // screen coordinate this ray was generated from
};
using Ray = RayT<double>;

struct Film {
    int width = 64, height = 64;
    double extent = 3.0; // horizontal span in screen units; vertical scaled by aspect

    double extent_y() const { return extent * double(height) / double(width); }
    double pixel_size() const { return extent / double(width); }
};

// Rows of the 2x3 left inverse of the forward Jacobian dx/du.
template <class S>
struct ScreenProjection {
    Vec3<S> row0, row1;
    Vec2<S> apply(const Vec3<S>& v) const { return {dot(row0, v), dot(row1, v)}; }
};

struct Camera {
    enum class Kind { Orthographic, Pinhole };
    Kind kind = Kind::Orthographic;
    Vec3d pos{0, 0, -3};
    Vec3d right{1, 0, 0}, up{0, 1, 0}, fwd{0, 0, 1};
    Film film;
    double fov_deg = 40.0; // pinhole only

    static Camera look_at(Kind kind, Vec3d pos, Vec3d target, Vec3d up_hint, Film film,
                          double fov_deg = 40.0) {
        Camera c;
        c.kind = kind;
        c.pos = pos;
        c.fwd = normalize(target - pos);
        c.right = normalize(cross(up_hint, c.fwd));
        // left-handed-free frame: right x fwd gives up
        c.up = cross(c.fwd, c.right);
        c.film = film;
        c.fov_deg = fov_deg;
        if (kind == Kind::Pinhole)
            c.film.extent = 2.0 * std::tan(0.5 * fov_deg * 3.14159265358979323846 / 180.0);
        return c;
    }

    // Point along the ray for screen coordinate u at distance parameter t.
    template <class S>
    Vec3<S> point(const Vec2<S>& u, const S& t) const {
        if (kind == Kind::Orthographic)
            return to_vec<S>(pos) + to_vec<S>(right) * u.x + to_vec<S>(up) * u.y +
                   to_vec<S>(fwd) * t;
        Vec3<S> dir = to_vec<S>(fwd) + to_vec<S>(right) * u.x + to_vec<S>(up) * u.y;
        return to_vec<S>(pos) + dir * (t / length(dir));
    }

    template <class S>
    RayT<S> generate_ray(const Vec2<S>& u) const {
        RayT<S> r;
        r.u = u;
        if (kind == Kind::Orthographic) {
            r.o = to_vec<S>(pos) + to_vec<S>(right) * u.x + to_vec<S>(up) * u.y;
            r.d = to_vec<S>(fwd);
        } else {
            r.o = to_vec<S>(pos);
            Vec3<S> dir = to_vec<S>(fwd) + to_vec<S>(right) * u.x + to_vec<S>(up) * u.y;
            r.d = dir / length(dir);
        }
        return r;
    }

    // The pinhole forward Jacobian vanishes at the camera point; warp
    // quadrature skips such points (their weight is negligible anyway).
    bool projection_valid(double t) const {
        return kind == Kind::Orthographic || t > 1e-9;
    }

    // Pseudo-inverse of dx/du at (u, t); composing with dx/du is the identity.
    template <class S>
    ScreenProjection<S> screen_projection(const Vec2<S>& u, const S& t) const {
        using DS = Dual<S, 2>;
        Vec2<DS> ul{DS::lift(u.x, 0), DS::lift(u.y, 1)};
        Vec3<DS> p = point(ul, DS(t));
        Vec3<S> c0{p.x.d[0], p.y.d[0], p.z.d[0]};
        Vec3<S> c1{p.x.d[1], p.y.d[1], p.z.d[1]};
        S a = dot(c0, c0), b = dot(c0, c1), c = dot(c1, c1);
        S det = a * c - b * b;
        if (!(scalar_value(det) > 1e-30))
            throw RankDeficientError("screen projection lost rank");
        S inv = S(1.0) / det;
        ScreenProjection<S> proj;
        proj.row0 = (c0 * c - c1 * b) * inv;
        proj.row1 = (c1 * a - c0 * b) * inv;
        return proj;
    }

    // Screen coordinate of a pixel-space position (px, py in [0,W]x[0,H]).
    Vec2d screen_of_pixel(double px, double py) const {
        return {(px / film.width - 0.5) * film.extent,
                (py / film.height - 0.5) * film.extent_y()};
    }

    double pixel_area() const {
        double p = film.pixel_size();
        return p * (film.extent_y() / film.height);
    }

    Camera at_level(int level) const {
        Camera c = *this;
        c.film.width = std::max(1, film.width >> level);
        c.film.height = std::max(1, film.height >> level);
        return c;
    }
};

} // namespace warpsdf
