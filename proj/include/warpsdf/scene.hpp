#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warpsdf/camera.hpp"
#include "warpsdf/sdf.hpp"

namespace warpsdf {

// Flat vector of every differentiable scene parameter.
struct ParamVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

struct Light {
    Vec3d direction{0, 0, 1}; // unit vector pointing from the surface toward the light
    Vec3d intensity{1, 1, 1};
};

struct Material {
    ParamRef albedo[3] = {ParamRef(0.8), ParamRef(0.8), ParamRef(0.8)};
    Vec3d ambient{0.0, 0.0, 0.0};
    Vec3d background{0.05, 0.05, 0.05};
    Light light;
    bool flat = false; // flat shading: hit pixels take the albedo directly
};

struct Scene {
    std::string name;
    SdfNodePtr root;
    Material material;
    Camera camera;
    std::vector<double> theta0;
    std::vector<std::string> param_names;
    double bounding_radius = 1.0;

    int param_index(const std::string& name) const {
        for (size_t i = 0; i < param_names.size(); ++i)
            if (param_names[i] == name) return int(i);
        return -1;
    }
};

struct TraceOptions {
    double tau_hit = 1e-5;
    double t_far = 10.0;
    int max_steps = 128;
    double step_scale = 1.0;
};

inline TraceOptions default_trace_options(const Scene& scene) {
    TraceOptions o;
    bool has_mlp = false;
    // MLP scenes get smaller steps and more of them (the field is only
    // approximately a distance).
    std::function<void(const SdfNode&)> walk = [&](const SdfNode& n) {
        if (n.kind == SdfKind::Mlp) has_mlp = true;
        for (const auto& c : n.children) walk(*c);
    };
    if (scene.root) walk(*scene.root);
    o.max_steps = has_mlp ? 256 : 128;
    o.step_scale = has_mlp ? 0.9 : 1.0;
    o.t_far = 2.0 * scene.bounding_radius + length(scene.camera.pos);
    return o;
}

// Mean over sample points of (|grad f| - 1)^2, with the parameter gradient
// accumulated through the nested adjoint. Degenerate-normal points are
// skipped and counted.
struct EikonalResult {
    double loss = 0.0;
    int used = 0;
    int skipped = 0;
};

inline EikonalResult eikonal_loss(const SdfNode& root, const std::vector<double>& theta,
                                  std::span<const Vec3d> points, double weight,
                                  std::span<double> grad) {
    EikonalResult r;
    double acc = 0.0;
    std::vector<std::pair<Vec3d, Vec3d>> seeds; // (point, d/dn seed)
    seeds.reserve(points.size());
    for (const Vec3d& p : points) {
        Vec3d g = sdf_spatial_gradient(root, p, theta);
        double norm = std::sqrt(dot(g, g));
        if (!std::isfinite(norm) || norm < 1e-8) {
            ++r.skipped;
            continue;
        }
        double resid = norm - 1.0;
        acc += resid * resid;
        ++r.used;
        seeds.emplace_back(p, g * (2.0 * resid / norm));
    }
    if (r.used == 0) return r;
    r.loss = acc / r.used;
    if (!grad.empty() && weight != 0.0) {
        double scale = weight / r.used;
        for (auto& [p, s] : seeds)
            accumulate_mixed_adjoint(root, theta, p, 0.0, s, scale, grad);
    }
    return r;
}

} // namespace warpsdf
