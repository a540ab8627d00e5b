#pragma once

// Composable signed-distance expressions. Every differentiable quantity
// is a slot into the flat scene parameter vector; nodes hold either a
// constant or a slot index. Evaluation is templated on the scalar type,
// so the same tree serves plain values, screen tangents, spatial
// gradients and any nesting of those. The reverse pass (sdf_backward)
// also runs on dual scalars, which is how mixed d_theta d_x derivatives
// are obtained.

#include <memory>
#include <span>
#include <vector>

#include "warpsdf/errors.hpp"
#include "warpsdf/mlp.hpp"
#include "warpsdf/vec.hpp"

namespace warpsdf {

enum class SdfKind {
    Sphere,
    Box,
    Torus,
    Plane,
    Union,
    SmoothUnion,
    Intersection,
    Complement,
    Transform,
    Mlp,
    Empty,
};

struct ParamRef {
    double value = 0.0; // constant when slot < 0
    int slot = -1;

    ParamRef() = default;
    ParamRef(double v) : value(v) {}
    static ParamRef slotted(int s) {
        ParamRef p;
        p.slot = s;
        return p;
    }
    bool is_slot() const { return slot >= 0; }

    template <class S, class TF>
    S get(TF&& tf) const {
        return is_slot() ? tf(slot) : S(value);
    }
};

struct SdfNode;
using SdfNodePtr = std::unique_ptr<SdfNode>;

struct SdfNode {
    SdfKind kind = SdfKind::Empty;
    ParamRef center[3];  // sphere/box/torus/plane point; transform translation
    ParamRef radius;     // sphere radius; torus major radius
    ParamRef radius2;    // torus tube radius
    ParamRef half[3];    // box half extents
    ParamRef normal[3];  // plane normal (normalized at eval time)
    ParamRef blend;      // smooth union width
    ParamRef scale;      // transform uniform scale
    Vec3d rot_axis{0.0, 0.0, 1.0};
    double rot_angle = 0.0; // radians; rotation is not parameter-slotted
    std::vector<SdfNodePtr> children;
    std::shared_ptr<MlpSdf> mlp;
};

constexpr double kEmptyDistance = 1e6;

// ---- builders -------------------------------------------------------------

inline SdfNodePtr make_sphere(ParamRef cx, ParamRef cy, ParamRef cz, ParamRef r) {
    auto n = std::make_unique<SdfNode>();
    n->kind = SdfKind::Sphere;
    n->center[0] = cx;
    n->center[1] = cy;
    n->center[2] = cz;
    n->radius = r;
    return n;
}

inline SdfNodePtr make_box(ParamRef cx, ParamRef cy, ParamRef cz,
                           ParamRef hx, ParamRef hy, ParamRef hz) {
    auto n = std::make_unique<SdfNode>();
    n->kind = SdfKind::Box;
    n->center[0] = cx;
    n->center[1] = cy;
    n->center[2] = cz;
    n->half[0] = hx;
    n->half[1] = hy;
    n->half[2] = hz;
    return n;
}

// Ring lies in the xz-plane around `center`, tube radius r2.
inline SdfNodePtr make_torus(ParamRef cx, ParamRef cy, ParamRef cz,
                             ParamRef major, ParamRef tube) {
    auto n = std::make_unique<SdfNode>();
    n->kind = SdfKind::Torus;
    n->center[0] = cx;
    n->center[1] = cy;
    n->center[2] = cz;
    n->radius = major;
    n->radius2 = tube;
    return n;
}

inline SdfNodePtr make_plane(ParamRef px, ParamRef py, ParamRef pz,
                             ParamRef nx, ParamRef ny, ParamRef nz) {
    auto n = std::make_unique<SdfNode>();
    n->kind = SdfKind::Plane;
    n->center[0] = px;
    n->center[1] = py;
    n->center[2] = pz;
    n->normal[0] = nx;
    n->normal[1] = ny;
    n->normal[2] = nz;
    return n;
}

inline SdfNodePtr make_combine(SdfKind kind, std::vector<SdfNodePtr> children,
                               ParamRef blend = ParamRef(0.25)) {
    auto n = std::make_unique<SdfNode>();
    n->kind = kind;
    n->children = std::move(children);
    n->blend = blend;
    return n;
}

inline SdfNodePtr make_complement(SdfNodePtr child) {
    auto n = std::make_unique<SdfNode>();
    n->kind = SdfKind::Complement;
    n->children.push_back(std::move(child));
    return n;
}

inline SdfNodePtr make_transform(SdfNodePtr child, ParamRef tx, ParamRef ty, ParamRef tz,
                                 ParamRef scale = ParamRef(1.0),
                                 Vec3d axis = {0, 0, 1}, double angle = 0.0) {
    auto n = std::make_unique<SdfNode>();
    n->kind = SdfKind::Transform;
    n->children.push_back(std::move(child));
    n->center[0] = tx;
    n->center[1] = ty;
    n->center[2] = tz;
    n->scale = scale;
    n->rot_axis = normalize(axis);
    n->rot_angle = angle;
    return n;
}

inline SdfNodePtr make_mlp(std::shared_ptr<MlpSdf> mlp) {
    auto n = std::make_unique<SdfNode>();
    n->kind = SdfKind::Mlp;
    n->mlp = std::move(mlp);
    return n;
}

inline SdfNodePtr make_empty() { return std::make_unique<SdfNode>(); }

// ---- evaluation -----------------------------------------------------------

template <class S>
auto theta_values(const std::vector<double>& theta) {
    return [&theta](int slot) { return S(theta[slot]); };
}

template <class S>
Vec3<S> rotate_axis_angle(const Vec3d& axis, double angle, const Vec3<S>& v) {
    if (angle == 0.0) return v;
    const double c = std::cos(angle), s = std::sin(angle);
    Vec3<S> k = to_vec<S>(axis);
    return v * c + cross(k, v) * S(s) + k * (dot(k, v) * S(1.0 - c));
}

namespace detail {

// iq-style polynomial smooth minimum; C1 in its inputs.
template <class S>
S smooth_min(const S& a, const S& b, const S& k, S* h_out = nullptr) {
    S h = 0.5 + 0.5 * (b - a) / k;
    double hv = scalar_value(h);
    if (hv < 0.0) h = S(0.0);
    if (hv > 1.0) h = S(1.0);
    if (h_out) *h_out = h;
    return b + (a - b) * h - k * h * (1.0 - h);
}

} // namespace detail

template <class S, class TF, class = std::enable_if_t<std::is_invocable_v<TF&, int>>>
S sdf_eval(const SdfNode& n, const Vec3<S>& x, TF&& tf) {
    switch (n.kind) {
    case SdfKind::Sphere: {
        Vec3<S> c{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        return length(x - c) - n.radius.get<S>(tf);
    }
    case SdfKind::Box: {
        Vec3<S> p = x - Vec3<S>{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        Vec3<S> q{abs(p.x) - n.half[0].get<S>(tf), abs(p.y) - n.half[1].get<S>(tf),
                  abs(p.z) - n.half[2].get<S>(tf)};
        Vec3<S> qp{branch_max(q.x, S(0.0)), branch_max(q.y, S(0.0)), branch_max(q.z, S(0.0))};
        S maxq = branch_max(q.x, branch_max(q.y, q.z));
        S inside = branch_min(maxq, S(0.0));
        if (scalar_value(maxq) <= 0.0) return inside; // avoid sqrt(0) tangents
        return length(qp) + inside;
    }
    case SdfKind::Torus: {
        Vec3<S> p = x - Vec3<S>{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        S l = sqrt(p.x * p.x + p.z * p.z);
        S qx = l - n.radius.get<S>(tf);
        return sqrt(qx * qx + p.y * p.y) - n.radius2.get<S>(tf);
    }
    case SdfKind::Plane: {
        Vec3<S> nr{n.normal[0].get<S>(tf), n.normal[1].get<S>(tf), n.normal[2].get<S>(tf)};
        Vec3<S> nh = nr / length(nr);
        Vec3<S> p = x - Vec3<S>{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        return dot(p, nh);
    }
    case SdfKind::Union: {
        S f = sdf_eval(*n.children[0], x, tf);
        for (size_t i = 1; i < n.children.size(); ++i)
            f = branch_min(f, sdf_eval(*n.children[i], x, tf));
        return f;
    }
    case SdfKind::Intersection: {
        S f = sdf_eval(*n.children[0], x, tf);
        for (size_t i = 1; i < n.children.size(); ++i)
            f = branch_max(f, sdf_eval(*n.children[i], x, tf));
        return f;
    }
    case SdfKind::SmoothUnion: {
        S k = n.blend.get<S>(tf);
        S f = sdf_eval(*n.children[0], x, tf);
        for (size_t i = 1; i < n.children.size(); ++i)
            f = detail::smooth_min(f, sdf_eval(*n.children[i], x, tf), k);
        return f;
    }
    case SdfKind::Complement:
        return -sdf_eval(*n.children[0], x, tf);
    case SdfKind::Transform: {
        Vec3<S> t{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        S s = n.scale.get<S>(tf);
        Vec3<S> xl = rotate_axis_angle(n.rot_axis, -n.rot_angle, x - t) / s;
        return s * sdf_eval(*n.children[0], xl, tf);
    }
    case SdfKind::Mlp:
        return mlp_eval(*n.mlp, x, tf);
    case SdfKind::Empty:
        return S(kEmptyDistance);
    }
    return S(kEmptyDistance);
}

template <class S>
S sdf_eval(const SdfNode& n, const Vec3<S>& x, const std::vector<double>& theta) {
    return sdf_eval(n, x, theta_values<S>(theta));
}

// ---- derivative helpers ---------------------------------------------------

template <class S>
Vec3<S> sdf_spatial_gradient(const SdfNode& root, const Vec3<S>& x,
                             const std::vector<double>& theta) {
    using DS = Dual<S, 3>;
    Vec3<DS> xl{DS::lift(x.x, 0), DS::lift(x.y, 1), DS::lift(x.z, 2)};
    DS f = sdf_eval(root, xl, theta_values<DS>(theta));
    return {f.d[0], f.d[1], f.d[2]};
}

template <class S>
std::pair<S, Vec3<S>> sdf_value_and_gradient(const SdfNode& root, const Vec3<S>& x,
                                             const std::vector<double>& theta) {
    using DS = Dual<S, 3>;
    Vec3<DS> xl{DS::lift(x.x, 0), DS::lift(x.y, 1), DS::lift(x.z, 2)};
    DS f = sdf_eval(root, xl, theta_values<DS>(theta));
    return {f.v, Vec3<S>{f.d[0], f.d[1], f.d[2]}};
}

// f and its directional derivative along dir at x.
template <class S>
std::pair<S, S> sdf_value_and_dir_deriv(const SdfNode& root, const Vec3<S>& x,
                                        const Vec3<S>& dir, const std::vector<double>& theta) {
    using DS = Dual<S, 1>;
    Vec3<DS> xl{DS(x.x), DS(x.y), DS(x.z)};
    xl.x.d[0] = dir.x;
    xl.y.d[0] = dir.y;
    xl.z.d[0] = dir.z;
    DS f = sdf_eval(root, xl, theta_values<DS>(theta));
    return {f.v, f.d[0]};
}

// ---- reverse pass ----------------------------------------------------------

// Accumulates seed * df/dtheta[slot] through sink(slot, value), and
// seed * df/dx into *x_adj when given. Recomputes forward values on the
// way down (trees are small; the MLP caches internally). Returns f.
template <class S, class Sink>
S sdf_backward(const SdfNode& n, const Vec3<S>& x, const std::vector<double>& theta,
               const S& seed, Sink&& sink, Vec3<S>* x_adj) {
    auto tf = theta_values<S>(theta);
    switch (n.kind) {
    case SdfKind::Sphere: {
        Vec3<S> c{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        Vec3<S> u = x - c;
        S len = length(u);
        if (scalar_value(len) < 1e-300) return -n.radius.get<S>(tf);
        Vec3<S> nh = u / len;
        if (n.radius.is_slot()) sink(n.radius.slot, -seed);
        for (int k = 0; k < 3; ++k)
            if (n.center[k].is_slot()) sink(n.center[k].slot, -seed * nh[k]);
        if (x_adj) *x_adj += seed * nh;
        return len - n.radius.get<S>(tf);
    }
    case SdfKind::Box: {
        Vec3<S> c{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        Vec3<S> h{n.half[0].get<S>(tf), n.half[1].get<S>(tf), n.half[2].get<S>(tf)};
        Vec3<S> p = x - c;
        Vec3<S> q{abs(p.x) - h.x, abs(p.y) - h.y, abs(p.z) - h.z};
        Vec3<S> dq{S(0.0), S(0.0), S(0.0)}; // df/dq
        S f;
        double qx = scalar_value(q.x), qy = scalar_value(q.y), qz = scalar_value(q.z);
        if (qx <= 0.0 && qy <= 0.0 && qz <= 0.0) {
            int am = (qx >= qy && qx >= qz) ? 0 : (qy >= qz ? 1 : 2);
            f = q[am];
            dq[am] = S(1.0);
        } else {
            Vec3<S> qp{branch_max(q.x, S(0.0)), branch_max(q.y, S(0.0)), branch_max(q.z, S(0.0))};
            S len = length(qp);
            f = len;
            for (int k = 0; k < 3; ++k)
                if (scalar_value(q[k]) > 0.0) dq[k] = qp[k] / len;
        }
        for (int k = 0; k < 3; ++k) {
            S sgn = scalar_value(p[k]) < 0.0 ? S(-1.0) : S(1.0);
            if (n.half[k].is_slot()) sink(n.half[k].slot, -seed * dq[k]);
            if (n.center[k].is_slot()) sink(n.center[k].slot, -seed * dq[k] * sgn);
            if (x_adj) (*x_adj)[k] += seed * dq[k] * sgn;
        }
        return f;
    }
    case SdfKind::Torus: {
        Vec3<S> c{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        Vec3<S> p = x - c;
        S l = sqrt(p.x * p.x + p.z * p.z);
        S qx = l - n.radius.get<S>(tf);
        S g = sqrt(qx * qx + p.y * p.y);
        S f = g - n.radius2.get<S>(tf);
        S dqx = qx / g;
        Vec3<S> dp{dqx * (p.x / l), p.y / g, dqx * (p.z / l)};
        if (n.radius.is_slot()) sink(n.radius.slot, -seed * dqx);
        if (n.radius2.is_slot()) sink(n.radius2.slot, -seed);
        for (int k = 0; k < 3; ++k) {
            if (n.center[k].is_slot()) sink(n.center[k].slot, -seed * dp[k]);
            if (x_adj) (*x_adj)[k] += seed * dp[k];
        }
        return f;
    }
    case SdfKind::Plane: {
        Vec3<S> nr{n.normal[0].get<S>(tf), n.normal[1].get<S>(tf), n.normal[2].get<S>(tf)};
        S len = length(nr);
        Vec3<S> nh = nr / len;
        Vec3<S> c{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        Vec3<S> p = x - c;
        S f = dot(p, nh);
        for (int k = 0; k < 3; ++k) {
            if (n.center[k].is_slot()) sink(n.center[k].slot, -seed * nh[k]);
            if (n.normal[k].is_slot()) sink(n.normal[k].slot, seed * (p[k] - nh[k] * f) / len);
            if (x_adj) (*x_adj)[k] += seed * nh[k];
        }
        return f;
    }
    case SdfKind::Union:
    case SdfKind::Intersection: {
        const bool is_min = n.kind == SdfKind::Union;
        size_t best = 0;
        S fbest = sdf_eval(*n.children[0], x, tf);
        for (size_t i = 1; i < n.children.size(); ++i) {
            S fi = sdf_eval(*n.children[i], x, tf);
            bool take = is_min ? scalar_value(fi) < scalar_value(fbest)
                               : scalar_value(fi) > scalar_value(fbest);
            if (take) {
                best = i;
                fbest = fi;
            }
        }
        sdf_backward(*n.children[best], x, theta, seed, sink, x_adj);
        return fbest;
    }
    case SdfKind::SmoothUnion: {
        S k = n.blend.get<S>(tf);
        size_t m = n.children.size();
        std::vector<S> vals(m), folds(m);
        for (size_t i = 0; i < m; ++i) vals[i] = sdf_eval(*n.children[i], x, tf);
        folds[0] = vals[0];
        for (size_t i = 1; i < m; ++i) folds[i] = detail::smooth_min(folds[i - 1], vals[i], k);
        S dfold = seed;
        for (size_t i = m; i-- > 1;) {
            S h;
            detail::smooth_min(folds[i - 1], vals[i], k, &h);
            // envelope: df/da = h, df/db = 1-h, df/dk = -h(1-h)
            if (n.blend.is_slot()) sink(n.blend.slot, dfold * (-(h * (1.0 - h))));
            sdf_backward(*n.children[i], x, theta, dfold * (1.0 - h), sink, x_adj);
            dfold = dfold * h;
        }
        sdf_backward(*n.children[0], x, theta, dfold, sink, x_adj);
        return folds[m - 1];
    }
    case SdfKind::Complement: {
        S f = sdf_backward(*n.children[0], x, theta, -seed, sink, x_adj);
        return -f;
    }
    case SdfKind::Transform: {
        Vec3<S> t{n.center[0].get<S>(tf), n.center[1].get<S>(tf), n.center[2].get<S>(tf)};
        S s = n.scale.get<S>(tf);
        Vec3<S> xl = rotate_axis_angle(n.rot_axis, -n.rot_angle, x - t) / s;
        Vec3<S> ca{S(0.0), S(0.0), S(0.0)};
        S g = sdf_backward(*n.children[0], xl, theta, seed * s, sink, &ca);
        Vec3<S> world = rotate_axis_angle(n.rot_axis, n.rot_angle, ca) / s;
        for (int k = 0; k < 3; ++k) {
            if (n.center[k].is_slot()) sink(n.center[k].slot, -world[k]);
            if (x_adj) (*x_adj)[k] += world[k];
        }
        if (n.scale.is_slot()) sink(n.scale.slot, seed * g - dot(ca, xl) / s);
        return s * g;
    }
    case SdfKind::Mlp:
        return mlp_backward(*n.mlp, x, theta, seed, sink, x_adj);
    case SdfKind::Empty:
        return S(kEmptyDistance);
    }
    return S(kEmptyDistance);
}

// Plain parameter adjoint: grad += seed * df/dtheta.
inline void accumulate_param_adjoint(const SdfNode& root, const Vec3d& x,
                                     const std::vector<double>& theta, double seed,
                                     std::span<double> grad) {
    sdf_backward(root, x, theta, seed,
                 [&](int slot, double v) { grad[std::size_t(slot)] += v; },
                 static_cast<Vec3d*>(nullptr));
}

// Nested adjoint: grad += scale * d/dtheta [ a*f(x) + grad_x f(x) . g ].
// Runs the reverse pass over a direction-lifted forward pass; the tangent
// component of each slot contribution is the mixed derivative.
inline void accumulate_mixed_adjoint(const SdfNode& root, const std::vector<double>& theta,
                                     const Vec3d& x, double a, const Vec3d& g,
                                     double scale, std::span<double> grad) {
    if (g.x == 0.0 && g.y == 0.0 && g.z == 0.0) {
        if (a == 0.0 || scale == 0.0) return;
        sdf_backward(root, x, theta, a * scale,
                     [&](int slot, double v) { grad[std::size_t(slot)] += v; },
                     static_cast<Vec3d*>(nullptr));
        return;
    }
    Vec3<D1> xl{D1(x.x), D1(x.y), D1(x.z)};
    xl.x.d[0] = g.x;
    xl.y.d[0] = g.y;
    xl.z.d[0] = g.z;
    D1 seed(1.0);
    seed.d[0] = a; // tangent part of the dual gradient is d_theta(grad f . g) + a * d_theta f
    sdf_backward(root, xl, theta, seed,
                 [&](int slot, const D1& v) { grad[std::size_t(slot)] += scale * v.d[0]; },
                 static_cast<Vec3<D1>*>(nullptr));
}

// Dense forward-mode gradient over theta (reference path for small N).
inline std::vector<double> sdf_theta_gradient_forward(const SdfNode& root, const Vec3d& x,
                                                      const std::vector<double>& theta) {
    std::vector<double> g(theta.size(), 0.0);
    for (size_t j = 0; j < theta.size(); ++j) {
        auto tf = [&](int slot) {
            D1 v(theta[slot]);
            if (slot == int(j)) v.d[0] = 1.0;
            return v;
        };
        Vec3<D1> xl{D1(x.x), D1(x.y), D1(x.z)};
        g[j] = sdf_eval(root, xl, tf).d[0];
    }
    return g;
}

} // namespace warpsdf
