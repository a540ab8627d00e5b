#pragma once

// Inverse-rendering loop: multi-view L2 image loss on sampled pixels,
// warped-gradient estimator, Adam, multi-scale target pyramid, optional
// Eikonal regularization for neural fields.

#include <string>

#include "warpsdf/gradient.hpp"

namespace warpsdf {

struct AdamConfig {
    double lr = 5e-2; // analytic default; neural fits use ~5e-4
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    long t = 0;

    void init(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        t = 0;
    }
};

void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg);

struct View {
    Camera camera;
    Image target;
};

struct Dataset {
    std::vector<View> views;
    std::vector<std::vector<Image>> pyramid; // [view][level], level 0 = full res

    void build_pyramid(int levels);
    const Image& target(int view, int level) const { return pyramid[view][level]; }
};

struct OptimConfig {
    int iterations = 2000;
    int pixels_per_iter = 512;
    int interior_spp = 2;
    int value_spp = 8;    // plain samples for the pixel-value (residual) pass
    int boundary_spp = 1; // per pixel edge
    GradMode mode = GradMode::Warped;
    WarpConfig warp;
    AdamConfig adam;
    double lr_final_scale = 1.0; // geometric lr decay toward lr * scale at the last iteration
    double grad_clip = 0.0;      // L2 clip on the batch gradient; 0 disables
    double eikonal_weight = 0.0;
    int eikonal_samples = 64;
    int pyramid_levels = 3;
    std::vector<double> level_switch = {1.0 / 3.0, 2.0 / 3.0}; // budget fractions
    std::uint64_t seed = 0;
    int threads = 1;
    double eps_graze = 1e-4;
    int checkpoint_every = 0;      // 0: no checkpoints
    std::string checkpoint_dir;    // used when checkpoint_every > 0
    double divergence_factor = 10.0;
    int divergence_patience = 100;
};

struct HistoryRow {
    int iteration = 0;
    int level = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
};

struct FitResult {
    std::vector<double> theta_best, theta_final;
    std::vector<HistoryRow> history;
    double best_loss = 0.0;
    int best_iteration = -1;
    bool diverged = false;
    GradStats stats;
};

// Pure in (cfg, iteration): pyramid level used at this iteration.
int level_for_iteration(const OptimConfig& cfg, int iteration);

struct PixelRef {
    int view = 0, px = 0, py = 0;
};

std::vector<PixelRef> sample_batch(const Dataset& data, int level, int count,
                                   std::uint64_t seed, int iteration);

// Mean L2 pixel loss over the batch (plus the Eikonal term when enabled)
// and its parameter gradient.
double loss_and_grad(const Scene& scene, const std::vector<double>& theta,
                     const Dataset& data, int level, std::span<const PixelRef> batch,
                     const OptimConfig& cfg, int iteration, std::vector<double>& grad,
                     GradStats& stats);

FitResult fit(const Scene& scene, const Dataset& data, const OptimConfig& cfg);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows);

} // namespace warpsdf
