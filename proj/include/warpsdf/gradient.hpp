#pragma once

// Per-pixel gradient estimator: interior term (implicit-function chain at
// the hit) plus the warp divergence term evaluated with screen tangents,
// plus the pixel-boundary line integral that corrects for the box filter.
// Naive mode keeps only the interior term.

#include <cstdint>
#include <optional>
#include <span>

#include "warpsdf/image.hpp"
#include "warpsdf/render.hpp"
#include "warpsdf/warp.hpp"

namespace warpsdf {

enum class GradMode { Warped, Naive };

struct GradConfig {
    GradMode mode = GradMode::Warped;
    int interior_spp = 2;
    int boundary_spp = 1; // per pixel edge
    WarpConfig warp;
    double eps_graze = 1e-4;
    std::uint64_t seed = 0;
    int iteration = 0;
};

struct GradStats {
    long grazing_skips = 0;
    long degenerate_skips = 0;
    long zero_warps = 0;
    long max_steps_rays = 0;
    long inside_starts = 0; // rays whose origin fell inside a (transient) field

    void add(const GradStats& o) {
        grazing_skips += o.grazing_skips;
        degenerate_skips += o.degenerate_skips;
        zero_warps += o.zero_warps;
        max_steps_rays += o.max_steps_rays;
        inside_starts += o.inside_starts;
    }
};

// d/dtheta of (cw . L)(u) + div_u((cw . L) V)(u) at one interior sample,
// scaled by `scale`, accumulated into grad.
void sample_gradient(const Scene& scene, const std::vector<double>& theta,
                     const Camera& camera, const Vec2d& u, const Vec3d& cw,
                     const GradConfig& cfg, const TraceOptions& opts, double scale,
                     std::span<double> grad, GradStats& stats);

// The Appendix-style pixel boundary term: -sum over the 4 edges of
// len * mean_samples (cw . L)(u_b) * (V(u_b) . n_b). Edge samples are keyed
// by the shared edge id, so neighboring pixels cancel exactly on shared
// edges.
void pixel_boundary_gradient(const Scene& scene, const std::vector<double>& theta,
                             const Camera& camera, int px, int py, const Vec3d& cw,
                             const GradConfig& cfg, const TraceOptions& opts, double scale,
                             std::span<double> grad, GradStats& stats);

// Boundary term of the whole film treated as a single domain (only the
// outer rim edges; interior pixel edges cancel pairwise by construction).
void film_rim_gradient(const Scene& scene, const std::vector<double>& theta,
                       const Camera& camera, const Vec3d& cw, const GradConfig& cfg,
                       const TraceOptions& opts, double scale, std::span<double> grad,
                       GradStats& stats);

// Full estimate of d/dtheta of the pixel integral of cw.L (area-scaled):
// area * mean over interior samples (interior + divergence) + boundary.
void accumulate_pixel_gradient(const Scene& scene, const std::vector<double>& theta,
                               const Camera& camera, int px, int py, const Vec3d& cw,
                               const GradConfig& cfg, const TraceOptions& opts, double scale,
                               std::span<double> grad, GradStats& stats);

// Central finite difference of the (area-scaled) pixel integral with
// common random numbers; the oracle the estimator is checked against.
double fd_pixel_gradient(const Scene& scene, const std::vector<double>& theta,
                         const Camera& camera, int px, int py, int slot, double h, int spp,
                         const Vec3d& cw, std::uint64_t seed);

struct GradientImage {
    ImageF value;
    ImageF variance; // per-sample variance of the interior+divergence integrand
    int spp = 0;
};

// Selector: single parameter slot, or a direction in theta space.
struct ParamSelector {
    int slot = -1;
    std::vector<double> direction; // used when slot < 0

    double pick(std::span<const double> grad) const {
        if (slot >= 0) return grad[std::size_t(slot)];
        double acc = 0.0;
        for (size_t i = 0; i < direction.size(); ++i) acc += direction[i] * grad[i];
        return acc;
    }
};

GradientImage gradient_image(const Scene& scene, const std::vector<double>& theta,
                             const Camera& camera, const ParamSelector& sel,
                             const GradConfig& cfg, int threads, GradStats* stats = nullptr);

ImageF fd_gradient_image(const Scene& scene, const std::vector<double>& theta,
                         const Camera& camera, int slot, double h, int spp,
                         std::uint64_t seed, int threads);

// Cross-check mode: theta-FD of the reparameterized integrand
// L(T(u,theta)) |det dT/du| with the warp frozen at theta0. Agrees with
// accumulate_pixel_gradient at theta0 up to MC noise on tiny scenes.
double eq4_fd_pixel(const Scene& scene, const std::vector<double>& theta, const Camera& camera,
                    int px, int py, int slot, double h, const GradConfig& cfg);

enum class PixelClass { Empty, Interior, Silhouette };

PixelClass classify_pixel(const Scene& scene, const std::vector<double>& theta,
                          const Camera& camera, int px, int py, const TraceOptions& opts);

// Warped vs naive vs finite differences over a whole image.
struct GradCheckClassStats {
    long count = 0;
    double fd_mean_abs = 0.0;
    double mae_warped = 0.0;
    double mae_naive = 0.0;
};

struct GradCheckReport {
    double pearson_warped = 0.0;
    double pearson_naive = 0.0;
    GradCheckClassStats cls[3]; // indexed by PixelClass
    GradientImage warped, naive;
    ImageF fd;
};

struct GradCheckConfig {
    int interior_spp = 256;
    int boundary_spp = 16;
    int fd_spp = 1024;
    double fd_h = 1e-3;
    std::uint64_t seed = 1;
    int threads = 1;
    WarpConfig warp;
};

GradCheckReport run_gradcheck(const Scene& scene, const std::vector<double>& theta,
                              int slot, const GradCheckConfig& cfg);

} // namespace warpsdf
