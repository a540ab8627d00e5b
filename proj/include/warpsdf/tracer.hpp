#pragma once

// Sphere tracing with a full trajectory record. Templated on the scalar
// type so the whole trace can carry screen tangents; comparisons and
// termination decisions act on primal values, so a lifted trace visits
// exactly the points a plain trace would.

#include <optional>
#include <vector>

#include "warpsdf/camera.hpp"
#include "warpsdf/scene.hpp"
#include "warpsdf/sdf.hpp"

namespace warpsdf {

enum class TraceStatus { Converged, Escaped, MaxSteps };

template <class S>
struct TrajPoint {
    S t;
    Vec3<S> x;
    S f;
};

template <class S>
struct TrajectoryT {
    std::vector<TrajPoint<S>> points;
    bool hit = false;
    TraceStatus status = TraceStatus::Escaped;
    S t_star{};      // valid iff hit; Newton-refined
    Vec3<S> x_star{};
    S grad_dot_d{};  // df/dt at the hit point (valid iff hit)
};
using Trajectory = TrajectoryT<double>;

template <class S>
TrajectoryT<S> sphere_trace(const SdfNode& root, const std::vector<double>& theta,
                            const RayT<S>& ray, const TraceOptions& opts) {
    TrajectoryT<S> traj;
    S t(0.0);
    for (int step = 0; step < opts.max_steps; ++step) {
        Vec3<S> x = ray.o + ray.d * t;
        S f = sdf_eval(root, x, theta);
        if (!is_finite(f))
            throw NumericalError("sphere_trace: non-finite SDF value");
        double fv = scalar_value(f);
        if (step == 0 && fv <= 0.0)
            throw InsideStartError("sphere_trace: ray origin inside geometry");
        traj.points.push_back({t, x, f});
        if (fv <= opts.tau_hit) {
            traj.hit = true;
            traj.status = TraceStatus::Converged;
            // Newton refinement of the hit distance; its tangents are the
            // implicit-function derivatives of t*(u).
            S tr = t;
            for (int it = 0; it < 2; ++it) {
                Vec3<S> xr = ray.o + ray.d * tr;
                auto [fr, dfr] = sdf_value_and_dir_deriv(root, xr, ray.d, theta);
                if (std::abs(scalar_value(dfr)) < 1e-8) break;
                S delta = fr / dfr;
                if (std::abs(scalar_value(delta)) > 0.05) break; // junk field, keep tr
                tr = tr - delta;
            }
            traj.t_star = tr;
            traj.x_star = ray.o + ray.d * tr;
            auto [fr, dfr] = sdf_value_and_dir_deriv(root, traj.x_star, ray.d, theta);
            (void)fr;
            traj.grad_dot_d = dfr;
            return traj;
        }
        if (scalar_value(t) > opts.t_far) {
            traj.status = TraceStatus::Escaped;
            return traj;
        }
        t = t + f * opts.step_scale;
    }
    traj.status = TraceStatus::MaxSteps;
    return traj;
}

// Implicit-function-theorem sensitivity of the hit distance:
// dt*/dtheta = -df/dtheta / (grad f . d). Accumulates seed * dt*/dtheta
// into grad and returns the chain factor -1/(grad f . d); nullopt for a
// grazing hit (|grad f . d| <= eps_graze), where the warp term must carry
// the silhouette signal instead.
inline std::optional<double> intersection_t_derivative(
    const SdfNode& root, const std::vector<double>& theta, const Vec3d& x_star,
    const Vec3d& d, double seed, std::span<double> grad, double eps_graze = 1e-6) {
    auto [f, dfdt] = sdf_value_and_dir_deriv(root, x_star, d, theta);
    (void)f;
    if (std::abs(dfdt) <= eps_graze) return std::nullopt;
    double factor = -1.0 / dfdt;
    accumulate_param_adjoint(root, x_star, theta, seed * factor, grad);
    return factor;
}

} // namespace warpsdf
