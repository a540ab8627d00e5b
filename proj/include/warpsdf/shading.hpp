#pragma once

#include "warpsdf/scene.hpp"

namespace warpsdf {

// Lambertian terminator smoothed with a narrow softplus so shading stays
// differentiable everywhere.
constexpr double kShadingSmoothWidth = 1e-3;

template <class S>
S smooth_relu(const S& z, double width = kShadingSmoothWidth) {
    return softplus(z, 1.0 / width);
}

// L = ambient + albedo * intensity * smoothmax(n_hat . l, 0).
// n_raw is the (unnormalized) SDF gradient at the hit point.
template <class S, class TF>
Vec3<S> shade(const Vec3<S>& n_raw, const Material& mat, TF&& tf) {
    Vec3<S> alb{mat.albedo[0].get<S>(tf), mat.albedo[1].get<S>(tf), mat.albedo[2].get<S>(tf)};
    if (mat.flat) return alb;
    S n2 = dot(n_raw, n_raw);
    if (!(scalar_value(n2) > 1e-16))
        throw DegenerateNormalError("shade: degenerate surface normal");
    Vec3<S> nh = n_raw / sqrt(n2);
    S ndl = dot(nh, to_vec<S>(mat.light.direction));
    S diff = smooth_relu(ndl);
    return {S(mat.ambient.x) + alb.x * diff * mat.light.intensity.x,
            S(mat.ambient.y) + alb.y * diff * mat.light.intensity.y,
            S(mat.ambient.z) + alb.z * diff * mat.light.intensity.z};
}

} // namespace warpsdf
