#pragma once

// Discontinuity-aware warp built from sphere-tracer quadrature: the
// silhouette characteristic S(x) = |f| + lambda_d |grad f . d| turns into
// harmonic weights (S + eps)^(-gamma), integrated along the ray with a
// trapezoid rule on the trace points, optionally restricted to the top-k
// weights (shifted so the smallest retained weight is zero, which keeps
// the warp continuous when the retained set changes).

#include <span>
#include <vector>

#include "warpsdf/camera.hpp"
#include "warpsdf/scene.hpp"
#include "warpsdf/tracer.hpp"

namespace warpsdf {

struct WarpConfig {
    double gamma = 4.0;
    double lambda_d = 0.1;     // multiplied by the scene bounding radius (units of length)
    double eps_pad_rel = 1e-6; // weight padding, relative to the bounding radius
    int k = 8;                 // top-k subset size, >= 2
    bool k_all = false;        // use every point with raw quadrature weights
    double eps_den = 1e-12;
    bool allow_diagnostic_gamma = false; // probes may run gamma <= 2 on purpose

    void validate() const {
        if (!(gamma > 2.0) && !allow_diagnostic_gamma)
            throw ConfigError("WarpConfig: gamma must be > 2");
        if (!(gamma > 0.0)) throw ConfigError("WarpConfig: gamma must be positive");
        if (!(lambda_d > 0.0)) throw ConfigError("WarpConfig: lambda_d must be > 0");
        if (!(eps_pad_rel > 0.0)) throw ConfigError("WarpConfig: eps_pad must be > 0");
        if (!k_all && k < 2) throw ConfigError("WarpConfig: k must be >= 2");
    }

    double lambda_eff(double bounding_radius) const { return lambda_d * bounding_radius; }
    double eps_pad(double bounding_radius) const { return eps_pad_rel * bounding_radius; }
};

template <class S>
S silhouette_score(const S& f, const S& grad_dot_d, double lambda_eff) {
    return abs(f) + lambda_eff * abs(grad_dot_d);
}

template <class S>
S harmonic_weight(const S& score, double gamma, double eps_pad) {
    return pow(score + eps_pad, -gamma);
}

// One-sided half intervals at the ends; interior (t[i+1]-t[i-1])/2.
template <class S>
std::vector<S> trapezoid_intervals(std::span<const S> t) {
    size_t n = t.size();
    std::vector<S> out(n);
    if (n < 2) return out; // single point: zero measure
    for (size_t i = 0; i < n; ++i) {
        const S& lo = t[i > 0 ? i - 1 : i];
        const S& hi = t[i + 1 < n ? i + 1 : i];
        out[i] = (hi - lo) * 0.5;
    }
    return out;
}

// w^q_i = w_i * interval_i
inline std::vector<double> quadrature_weights(std::span<const double> t,
                                              std::span<const double> w) {
    auto iv = trapezoid_intervals(t);
    for (size_t i = 0; i < iv.size(); ++i) iv[i] *= w[i];
    return iv;
}

// Indices of the k largest (ties toward the smaller trajectory index).
std::vector<int> topk_indices(std::span<const double> wq, int k);

// Top-k weights: each retained weight shifted by the smallest retained
// one; everything else zero. k >= length applies the same formula with
// the whole set; the "all" mode returns w^q unshifted.
std::vector<double> topk_weights(std::span<const double> wq, int k, bool k_all = false);

// Per-point diagnostics for one ray (weights-dump CSV, probes, tests).
struct RayWeights {
    std::vector<double> t, f, score, w, wq, wk, omega;
    double denominator = 0.0;
    bool zero_warp = true;
};

RayWeights compute_ray_weights(const SdfNode& root, const std::vector<double>& theta,
                               const Trajectory& traj, const Vec3d& ray_dir,
                               const WarpConfig& cfg, double bounding_radius);

// Value-level warp field at one screen point: V_j(u) = sum_i omega_i *
// (-df/dtheta_j(x_i)) * b_i with b_i the screen projection of the surface
// normal direction at x_i. The theta dependence stays factored; callers
// contract it through the adjoint.
struct WarpFieldPoint {
    Vec3d x;
    double omega = 0.0;
    Vec2d b{0.0, 0.0};
};

struct WarpField {
    std::vector<WarpFieldPoint> pts;
    bool zero = true;
    int degenerate_skipped = 0;
};

WarpField warp_field(const SdfNode& root, const std::vector<double>& theta,
                     const Camera& camera, const Ray& ray, const Trajectory& traj,
                     const WarpConfig& cfg, double bounding_radius);

// grad_j += seed * (V_j . s)
void accumulate_V_contraction(const SdfNode& root, const std::vector<double>& theta,
                              const WarpField& field, const Vec2d& s, double seed,
                              std::span<double> grad);

// V_j(u) for a single parameter slot (tests / diagnostics).
Vec2d warp_V_param(const SdfNode& root, const std::vector<double>& theta,
                   const Camera& camera, const Vec2d& u, int slot, const WarpConfig& cfg,
                   const TraceOptions& opts, double bounding_radius);

// grad_j += seed * <G(x)_j, v>, G = -df/dtheta (grad_x f)^T / |grad_x f|^2.
// Returns false (and accumulates nothing) on a degenerate normal.
bool accumulate_G_contraction(const SdfNode& root, const std::vector<double>& theta,
                              const Vec3d& x, const Vec3d& v, double seed,
                              std::span<double> grad);

// Max normalized weight per probe coordinate (Kronecker-delta diagnostic).
std::vector<double> kronecker_probe(const SdfNode& root, const std::vector<double>& theta,
                                    const Camera& camera, std::span<const Vec2d> us,
                                    const WarpConfig& cfg, const TraceOptions& opts,
                                    double bounding_radius);

// Closed-form lower-bound factor from the weight lemmas:
// (sqrt(r^2+d^2) - r + lambda*d/sqrt(r^2+d^2))^(-gamma) * (sqrt(r^2+d^2) - r).
double lemma_bound_eval(double delta, double r_l, double lambda_d, double gamma);

// Dense 1-D screen scan over [u_from, u_to] watching the retained top-k
// index set. Set changes with equal trajectory length are top-k swaps
// (the swapped weight must vanish at the crossing); changes of trajectory
// length are stepping artifacts and are tracked separately. Also bounds
// warp jumps against the locally estimated secant slope.
struct TopkScanResult {
    int swap_events = 0;
    int trajectory_events = 0;
    double worst_swap_ratio = 0.0;  // swapped wk / max wk, bisected to the crossing
    double worst_jump_factor = 0.0; // per-interval |dV| over neighborhood mean |dV|
};

TopkScanResult topk_continuity_scan(const SdfNode& root, const std::vector<double>& theta,
                                    const Camera& camera, int slot, const Vec2d& u_from,
                                    const Vec2d& u_to, int n_points, const WarpConfig& cfg,
                                    const TraceOptions& opts, double bounding_radius);

} // namespace warpsdf
