#include "warpsdf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "warpsdf/scene_io.hpp"

namespace warpsdf {

void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg) {
    ++state.t;
    const double b1t = 1.0 - std::pow(cfg.beta1, double(state.t));
    const double b2t = 1.0 - std::pow(cfg.beta2, double(state.t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        double mhat = state.m[i] / b1t;
        double vhat = state.v[i] / b2t;
        theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

void Dataset::build_pyramid(int levels) {
    pyramid.assign(views.size(), {});
    for (size_t v = 0; v < views.size(); ++v) {
        pyramid[v].push_back(views[v].target);
        for (int l = 1; l < levels; ++l)
            pyramid[v].push_back(downsample2(pyramid[v].back()));
    }
}

int level_for_iteration(const OptimConfig& cfg, int iteration) {
    if (cfg.pyramid_levels <= 1) return 0;
    double frac = double(iteration) / std::max(1, cfg.iterations);
    int level = cfg.pyramid_levels - 1;
    for (double s : cfg.level_switch) {
        if (frac >= s) --level;
    }
    return std::clamp(level, 0, cfg.pyramid_levels - 1);
}

std::vector<PixelRef> sample_batch(const Dataset& data, int level, int count,
                                   std::uint64_t seed, int iteration) {
    Rng rng = Rng::keyed({seed, kStreamBatch, std::uint64_t(iteration)});
    std::vector<PixelRef> batch(static_cast<std::size_t>(count));
    for (auto& p : batch) {
        p.view = int(rng.next_below(std::uint32_t(data.views.size())));
        const Image& img = data.target(p.view, level);
        p.px = int(rng.next_below(std::uint32_t(img.width)));
        p.py = int(rng.next_below(std::uint32_t(img.height)));
    }
    return batch;
}

double loss_and_grad(const Scene& scene, const std::vector<double>& theta,
                     const Dataset& data, int level, std::span<const PixelRef> batch,
                     const OptimConfig& cfg, int iteration, std::vector<double>& grad,
                     GradStats& stats) {
    const std::size_t nb = batch.size();
    TraceOptions opts = default_trace_options(scene);
    const int threads = std::max(1, cfg.threads);
    std::vector<std::vector<double>> wgrads(threads);
    std::vector<double> wloss(threads, 0.0);
    std::vector<GradStats> wstats(threads);

    parallel_for(long(nb), threads, [&](long lo, long hi, int w) {
        auto& g = wgrads[w];
        g.assign(theta.size(), 0.0);
        for (long i = lo; i < hi; ++i) {
            const PixelRef& pr = batch[std::size_t(i)];
            Camera cam = data.views[std::size_t(pr.view)].camera.at_level(level);
            const Image& tgt = data.target(pr.view, level);
            const float* tp = tgt.pixel(pr.px, pr.py);
            try {

            std::uint64_t pixel_seed =
                detail::splitmix64(cfg.seed ^ (0x9e3779b97f4a7c15ull * (pr.view + 1)));

            // value pass (its own sample stream; plain traces, so cheap)
            Vec3d I = render_pixel(scene, theta, cam, pr.px, pr.py,
                                   std::max(cfg.value_spp, 1), pixel_seed, iteration, opts);
            Vec3d resid{I.x - tp[0], I.y - tp[1], I.z - tp[2]};
            wloss[w] += dot(resid, resid);

            // gradient pass; pixel gradients are area-scaled, the loss chain
            // needs d(mean)/dtheta
            GradConfig gc;
            gc.mode = cfg.mode;
            gc.interior_spp = cfg.interior_spp;
            gc.boundary_spp = cfg.boundary_spp;
            gc.warp = cfg.warp;
            gc.eps_graze = cfg.eps_graze;
            gc.seed = pixel_seed;
            gc.iteration = iteration;
            Vec3d cw = resid * (2.0 / double(nb));
            accumulate_pixel_gradient(scene, theta, cam, pr.px, pr.py, cw, gc, opts,
                                      1.0 / cam.pixel_area(), g, wstats[w]);
            } catch (const InsideStartError&) {
                ++wstats[w].inside_starts; // transient field: drop the sample
            }
        }
    });

    double loss = 0.0;
    for (int w = 0; w < threads; ++w) {
        loss += wloss[w];
        if (!wgrads[w].empty())
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += wgrads[w][i];
        stats.add(wstats[w]);
    }
    loss /= double(nb);

    if (cfg.eikonal_weight > 0.0 && cfg.eikonal_samples > 0) {
        Rng rng = Rng::keyed({cfg.seed, kStreamEikonal, std::uint64_t(iteration)});
        double r = 1.2 * scene.bounding_radius;
        std::vector<Vec3d> pts(std::size_t(cfg.eikonal_samples));
        for (auto& p : pts)
            p = Vec3d{rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)};
        EikonalResult er = eikonal_loss(*scene.root, theta, pts, cfg.eikonal_weight, grad);
        loss += cfg.eikonal_weight * er.loss;
        stats.degenerate_skips += er.skipped;
    }
    return loss;
}

FitResult fit(const Scene& scene, const Dataset& data, const OptimConfig& cfg) {
    FitResult res;
    std::vector<double> theta = scene.theta0;
    AdamState adam;
    adam.init(theta.size());
    std::vector<double> grad(theta.size(), 0.0);

    res.best_loss = std::numeric_limits<double>::infinity();
    double initial_loss = -1.0;
    double loss_ema = -1.0;
    int over_budget_streak = 0;

    for (int it = 0; it < cfg.iterations; ++it) {
        int level = level_for_iteration(cfg, it);
        auto batch = sample_batch(data, level, cfg.pixels_per_iter, cfg.seed, it);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = loss_and_grad(scene, theta, data, level, batch, cfg, it, grad, res.stats);

        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        if (cfg.grad_clip > 0.0 && gnorm > cfg.grad_clip) {
            double sc = cfg.grad_clip / gnorm;
            for (double& g : grad) g *= sc;
        }
        res.history.push_back({it, level, loss, gnorm});

        if (initial_loss < 0.0) initial_loss = loss;
        // smoothed loss: a single lucky batch should not define "best"
        loss_ema = loss_ema < 0.0 ? loss : 0.92 * loss_ema + 0.08 * loss;
        if (it >= 20 && loss_ema < res.best_loss) {
            res.best_loss = loss_ema;
            res.best_iteration = it;
            res.theta_best = theta;
        }
        over_budget_streak = loss > cfg.divergence_factor * initial_loss
                                 ? over_budget_streak + 1
                                 : 0;
        if (over_budget_streak >= cfg.divergence_patience) {
            res.diverged = true;
            break;
        }

        AdamConfig step_cfg = cfg.adam;
        if (cfg.lr_final_scale != 1.0 && cfg.iterations > 1)
            step_cfg.lr = cfg.adam.lr *
                          std::pow(cfg.lr_final_scale, double(it) / (cfg.iterations - 1));
        adam_step(theta, grad, adam, step_cfg);

        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
            (it + 1) % cfg.checkpoint_every == 0) {
            std::string base = cfg.checkpoint_dir + "/ckpt_" + std::to_string(it + 1);
            save_scene(base + ".json", scene, &theta);
            write_theta(base + ".theta", theta);
        }
    }
    res.theta_final = theta;
    if (res.theta_best.empty()) res.theta_best = theta;
    return res;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write history file: " + path);
    out << "iteration,level,loss,grad_norm\n";
    char line[128];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g\n", r.iteration, r.level, r.loss,
                      r.grad_norm);
        out << line;
    }
}

} // namespace warpsdf
