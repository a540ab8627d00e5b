#pragma once

#include "warpsdf/image.hpp"
#include "warpsdf/rng.hpp"
#include "warpsdf/scene.hpp"
#include "warpsdf/shading.hpp"
#include "warpsdf/tracer.hpp"

namespace warpsdf {

struct RenderCounters {
    long max_steps_rays = 0;
    long degenerate_normals = 0;
};

// Radiance from an already-traced ray. A max-steps termination shades as
// a miss (background) but the trajectory still feeds the warp.
template <class S>
Vec3<S> radiance_from_traj(const SdfNode& root, const std::vector<double>& theta,
                           const Material& mat, const TrajectoryT<S>& traj,
                           RenderCounters* counters = nullptr) {
    if (!traj.hit) {
        if (counters && traj.status == TraceStatus::MaxSteps) ++counters->max_steps_rays;
        return to_vec<S>(mat.background);
    }
    auto tf = theta_values<S>(theta);
    if (mat.flat) return shade(Vec3<S>{S(0.0), S(0.0), S(1.0)}, mat, tf);
    Vec3<S> n = sdf_spatial_gradient(root, traj.x_star, theta);
    return shade(n, mat, tf);
}

inline Vec3d radiance(const Scene& scene, const std::vector<double>& theta, const Camera& camera,
                      const Vec2d& u, const TraceOptions& opts,
                      Trajectory* traj_out = nullptr, RenderCounters* counters = nullptr) {
    Ray ray = camera.generate_ray(u);
    Trajectory traj = sphere_trace(*scene.root, theta, ray, opts);
    Vec3d L = radiance_from_traj(*scene.root, theta, scene.material, traj, counters);
    if (traj_out) *traj_out = std::move(traj);
    return L;
}

// Stratified jittered positions inside pixel (px, py); deterministic in
// (seed, pixel, sample, iteration).
inline Vec2d pixel_sample(const Camera& camera, int px, int py, int s, int spp,
                          std::uint64_t seed, int iteration) {
    int gx = 1, gy = 1;
    while (gx * gy < spp) (gx <= gy ? gx : gy) += 1;
    Rng rng = Rng::keyed({seed, kStreamPixel, std::uint64_t(py) << 32 | std::uint64_t(px),
                          std::uint64_t(s), std::uint64_t(iteration)});
    int cell = s % (gx * gy);
    double jx = (cell % gx + rng.next_double()) / gx;
    double jy = (cell / gx + rng.next_double()) / gy;
    return camera.screen_of_pixel(px + jx, py + jy);
}

Vec3d render_pixel(const Scene& scene, const std::vector<double>& theta, const Camera& camera,
                   int px, int py, int spp, std::uint64_t seed, int iteration,
                   const TraceOptions& opts, RenderCounters* counters = nullptr);

Image render_image(const Scene& scene, const std::vector<double>& theta, const Camera& camera,
                   int spp, std::uint64_t seed, int threads = 1, int iteration = 0,
                   RenderCounters* counters = nullptr);

// Plain parallel-for over [0, n) in contiguous chunks; deterministic
// partitioning for a fixed thread count.
void parallel_for(long n, int threads, const std::function<void(long, long, int)>& fn);

} // namespace warpsdf
