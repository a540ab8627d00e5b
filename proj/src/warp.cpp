#include "warpsdf/warp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace warpsdf {

std::vector<int> topk_indices(std::span<const double> wq, int k) {
    std::vector<int> idx(wq.size());
    std::iota(idx.begin(), idx.end(), 0);
    int kk = std::min<int>(k, int(wq.size()));
    std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), [&](int a, int b) {
        if (wq[a] != wq[b]) return wq[a] > wq[b];
        return a < b;
    });
    idx.resize(kk);
    return idx;
}

std::vector<double> topk_weights(std::span<const double> wq, int k, bool k_all) {
    if (k_all) return std::vector<double>(wq.begin(), wq.end());
    std::vector<double> out(wq.size(), 0.0);
    auto idx = topk_indices(wq, k);
    if (idx.empty()) return out;
    double m = wq[idx[0]];
    for (int i : idx) m = std::min(m, wq[i]);
    for (int i : idx) out[i] = wq[i] - m;
    return out;
}

RayWeights compute_ray_weights(const SdfNode& root, const std::vector<double>& theta,
                               const Trajectory& traj, const Vec3d& ray_dir,
                               const WarpConfig& cfg, double bounding_radius) {
    cfg.validate();
    RayWeights rw;
    const size_t n = traj.points.size();
    rw.t.resize(n);
    rw.f.resize(n);
    rw.score.resize(n);
    rw.w.resize(n);
    const double lam = cfg.lambda_eff(bounding_radius);
    const double pad = cfg.eps_pad(bounding_radius);
    for (size_t i = 0; i < n; ++i) {
        const auto& p = traj.points[i];
        auto [f, dfdt] = sdf_value_and_dir_deriv(root, p.x, ray_dir, theta);
        rw.t[i] = p.t;
        rw.f[i] = f;
        rw.score[i] = silhouette_score(f, dfdt, lam);
        rw.w[i] = harmonic_weight(rw.score[i], cfg.gamma, pad);
    }
    rw.wq = quadrature_weights(rw.t, rw.w);
    rw.wk = topk_weights(rw.wq, cfg.k, cfg.k_all);
    rw.denominator = std::accumulate(rw.wk.begin(), rw.wk.end(), 0.0);
    rw.omega.assign(n, 0.0);
    rw.zero_warp = !(rw.denominator > cfg.eps_den);
    if (!rw.zero_warp)
        for (size_t i = 0; i < n; ++i) rw.omega[i] = rw.wk[i] / rw.denominator;
    return rw;
}

WarpField warp_field(const SdfNode& root, const std::vector<double>& theta,
                     const Camera& camera, const Ray& ray, const Trajectory& traj,
                     const WarpConfig& cfg, double bounding_radius) {
    WarpField field;
    if (traj.points.size() < 2) return field; // single point: zero-warp fallback
    RayWeights rw = compute_ray_weights(root, theta, traj, ray.d, cfg, bounding_radius);
    if (rw.zero_warp) return field;
    field.zero = false;
    for (size_t i = 0; i < traj.points.size(); ++i) {
        if (rw.omega[i] == 0.0) continue;
        const auto& p = traj.points[i];
        if (!camera.projection_valid(p.t)) {
            ++field.degenerate_skipped;
            continue;
        }
        Vec3d g = sdf_spatial_gradient(root, p.x, theta);
        double n2 = dot(g, g);
        if (!std::isfinite(n2) || n2 < 1e-16) {
            ++field.degenerate_skipped;
            continue;
        }
        auto proj = camera.screen_projection(ray.u, p.t);
        WarpFieldPoint fp;
        fp.x = p.x;
        fp.omega = rw.omega[i];
        fp.b = proj.apply(g * (1.0 / n2));
        field.pts.push_back(fp);
    }
    return field;
}

void accumulate_V_contraction(const SdfNode& root, const std::vector<double>& theta,
                              const WarpField& field, const Vec2d& s, double seed,
                              std::span<double> grad) {
    if (field.zero || seed == 0.0) return;
    for (const auto& p : field.pts) {
        double c = -seed * p.omega * dot(p.b, s);
        if (c == 0.0) continue;
        accumulate_param_adjoint(root, p.x, theta, c, grad);
    }
}

Vec2d warp_V_param(const SdfNode& root, const std::vector<double>& theta,
                   const Camera& camera, const Vec2d& u, int slot, const WarpConfig& cfg,
                   const TraceOptions& opts, double bounding_radius) {
    Ray ray = camera.generate_ray(u);
    Trajectory traj = sphere_trace(root, theta, ray, opts);
    WarpField field = warp_field(root, theta, camera, ray, traj, cfg, bounding_radius);
    Vec2d v{0.0, 0.0};
    for (const auto& p : field.pts) {
        double a = 0.0;
        sdf_backward(root, p.x, theta, 1.0,
                     [&](int s_, double val) {
                         if (s_ == slot) a += val;
                     },
                     static_cast<Vec3d*>(nullptr));
        v += p.b * (-p.omega * a);
    }
    return v;
}

bool accumulate_G_contraction(const SdfNode& root, const std::vector<double>& theta,
                              const Vec3d& x, const Vec3d& v, double seed,
                              std::span<double> grad) {
    Vec3d g = sdf_spatial_gradient(root, x, theta);
    double n2 = dot(g, g);
    if (!std::isfinite(n2) || n2 < 1e-16) return false;
    accumulate_param_adjoint(root, x, theta, -seed * dot(g, v) / n2, grad);
    return true;
}

std::vector<double> kronecker_probe(const SdfNode& root, const std::vector<double>& theta,
                                    const Camera& camera, std::span<const Vec2d> us,
                                    const WarpConfig& cfg, const TraceOptions& opts,
                                    double bounding_radius) {
    std::vector<double> out;
    out.reserve(us.size());
    for (const Vec2d& u : us) {
        Ray ray = camera.generate_ray(u);
        Trajectory traj = sphere_trace(root, theta, ray, opts);
        if (traj.points.size() < 2) {
            out.push_back(0.0);
            continue;
        }
        RayWeights rw = compute_ray_weights(root, theta, traj, ray.d, cfg, bounding_radius);
        double m = 0.0;
        for (double o : rw.omega) m = std::max(m, o);
        out.push_back(m);
    }
    return out;
}

double lemma_bound_eval(double delta, double r_l, double lambda_d, double gamma) {
    double s = std::sqrt(r_l * r_l + delta * delta);
    double base = s - r_l + lambda_d * delta / s;
    return std::pow(base, -gamma) * (s - r_l);
}

namespace {

struct ScanState {
    size_t traj_len = 0;
    std::vector<int> retained; // sorted retained indices
    std::vector<double> wk;
    double max_wk = 0.0;
    Vec2d v{0.0, 0.0};
};

ScanState scan_state_at(const SdfNode& root, const std::vector<double>& theta,
                        const Camera& camera, int slot, const Vec2d& u,
                        const WarpConfig& cfg, const TraceOptions& opts, double rb) {
    ScanState st;
    Ray ray = camera.generate_ray(u);
    Trajectory traj = sphere_trace(root, theta, ray, opts);
    st.traj_len = traj.points.size();
    if (st.traj_len < 2) return st;
    RayWeights rw = compute_ray_weights(root, theta, traj, ray.d, cfg, rb);
    st.wk = rw.wk;
    for (double w : rw.wk) st.max_wk = std::max(st.max_wk, w);
    if (cfg.k_all) {
        st.retained.resize(rw.wk.size());
        std::iota(st.retained.begin(), st.retained.end(), 0);
    } else {
        st.retained = topk_indices(rw.wq, cfg.k);
        std::sort(st.retained.begin(), st.retained.end());
    }
    if (!rw.zero_warp) {
        for (size_t i = 0; i < traj.points.size(); ++i) {
            if (rw.omega[i] == 0.0) continue;
            if (!camera.projection_valid(traj.points[i].t)) continue;
            double a = 0.0;
            sdf_backward(root, traj.points[i].x, theta, 1.0,
                         [&](int s_, double val) {
                             if (s_ == slot) a += val;
                         },
                         static_cast<Vec3d*>(nullptr));
            Vec3d g = sdf_spatial_gradient(root, traj.points[i].x, theta);
            double n2 = dot(g, g);
            if (!(n2 > 1e-16)) continue;
            auto proj = camera.screen_projection(ray.u, traj.points[i].t);
            Vec2d b = proj.apply(g * (1.0 / n2));
            st.v += b * (-rw.omega[i] * a);
        }
    }
    return st;
}

} // namespace

TopkScanResult topk_continuity_scan(const SdfNode& root, const std::vector<double>& theta,
                                    const Camera& camera, int slot, const Vec2d& u_from,
                                    const Vec2d& u_to, int n_points, const WarpConfig& cfg,
                                    const TraceOptions& opts, double bounding_radius) {
    TopkScanResult res;
    Vec2d span = u_to - u_from;
    auto at = [&](double s) {
        return scan_state_at(root, theta, camera, slot, u_from + span * s, cfg, opts,
                             bounding_radius);
    };

    std::vector<ScanState> states(static_cast<std::size_t>(n_points));
    std::vector<double> ss(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        ss[std::size_t(i)] = double(i) / (n_points - 1);
        states[std::size_t(i)] = at(ss[std::size_t(i)]);
    }

    // warp jump bound: each interval's |dV| against the mean of its neighbors
    std::vector<double> dv(static_cast<std::size_t>(n_points) - 1);
    for (int i = 0; i + 1 < n_points; ++i) {
        Vec2d d = states[std::size_t(i) + 1].v - states[std::size_t(i)].v;
        dv[std::size_t(i)] = std::sqrt(dot(d, d));
    }
    for (int i = 0; i + 1 < n_points; ++i) {
        double acc = 0.0;
        int cnt = 0;
        for (int j = std::max(0, i - 5); j <= std::min(n_points - 2, i + 5); ++j) {
            if (j == i) continue;
            acc += dv[std::size_t(j)];
            ++cnt;
        }
        double local = cnt ? acc / cnt : 0.0;
        if (local > 1e-300)
            res.worst_jump_factor = std::max(res.worst_jump_factor, dv[std::size_t(i)] / local);
    }

    // set-change events, bisected to the crossing
    for (int i = 0; i + 1 < n_points; ++i) {
        const ScanState &a = states[std::size_t(i)], &b = states[std::size_t(i) + 1];
        if (a.retained == b.retained && a.traj_len == b.traj_len) continue;
        if (a.traj_len != b.traj_len) {
            ++res.trajectory_events;
            continue;
        }
        ++res.swap_events;
        double lo = ss[std::size_t(i)], hi = ss[std::size_t(i) + 1];
        ScanState sa = a;
        for (int it = 0; it < 80 && hi - lo > 0.0; ++it) {
            double mid = 0.5 * (lo + hi);
            ScanState sm = at(mid);
            if (sm.retained == sa.retained && sm.traj_len == sa.traj_len)
                lo = mid;
            else
                hi = mid;
        }
        ScanState sl = at(lo), sh = at(hi);
        if (sl.traj_len != sh.traj_len) {
            // resolved into a stepping artifact after refinement
            --res.swap_events;
            ++res.trajectory_events;
            continue;
        }
        // the swapped indices: symmetric difference of the retained sets
        double worst = 0.0;
        for (int idx : sl.retained)
            if (!std::binary_search(sh.retained.begin(), sh.retained.end(), idx))
                worst = std::max(worst, sl.wk[std::size_t(idx)] /
                                            std::max(sl.max_wk, 1e-300));
        for (int idx : sh.retained)
            if (!std::binary_search(sl.retained.begin(), sl.retained.end(), idx))
                worst = std::max(worst, sh.wk[std::size_t(idx)] /
                                            std::max(sh.max_wk, 1e-300));
        res.worst_swap_ratio = std::max(res.worst_swap_ratio, worst);
    }
    return res;
}

} // namespace warpsdf
