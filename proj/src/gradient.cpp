#include "warpsdf/gradient.hpp"

#include <algorithm>
#include <cmath>

namespace warpsdf {

namespace {

void stratum_jitter(int s, int spp, Rng& rng, double& jx, double& jy) {
    int gx = 1, gy = 1;
    while (gx * gy < spp) (gx <= gy ? gx : gy) += 1;
    int cell = s % (gx * gy);
    jx = (cell % gx + rng.next_double()) / gx;
    jy = (cell / gx + rng.next_double()) / gy;
}

Vec2d gradient_sample_u(const Camera& camera, int px, int py, int s, int spp,
                        std::uint64_t seed, int iteration) {
    Rng rng = Rng::keyed({seed, kStreamGradient, std::uint64_t(py) << 32 | std::uint64_t(px),
                          std::uint64_t(s), std::uint64_t(iteration)});
    double jx, jy;
    stratum_jitter(s, spp, rng, jx, jy);
    return camera.screen_of_pixel(px + jx, py + jy);
}

// Geometry chain of the interior term at a hit:
//   d/dtheta (cw.L) = (dLw/dt) dt*/dtheta + sum_k (dLw/dn_k) d/dtheta (d_k f)
// assembled as one nested adjoint with value seed a = -(dLw/dt)/(grad f.d)
// and direction g = dLw/dn. Material (albedo) slots are added explicitly.
void interior_term_at_hit(const Scene& scene, const std::vector<double>& theta,
                          const Vec3d& x_star, const Vec3d& d, double dfdt, const Vec3d& cw,
                          double eps_graze, double scale, std::span<double> grad,
                          GradStats& stats) {
    const Material& mat = scene.material;
    const SdfNode& root = *scene.root;

    // albedo parameter slots (diffuse factor or flat color)
    bool any_albedo = mat.albedo[0].is_slot() || mat.albedo[1].is_slot() ||
                      mat.albedo[2].is_slot();

    if (mat.flat) {
        if (any_albedo)
            for (int ch = 0; ch < 3; ++ch)
                if (mat.albedo[ch].is_slot())
                    grad[std::size_t(mat.albedo[ch].slot)] += scale * cw[ch];
        return; // flat shading has no geometric interior dependence
    }

    // normal and Hessian.d at the hit, in one nested forward pass
    using SD = Dual<D1, 3>;
    Vec3<SD> xl;
    for (int k = 0; k < 3; ++k) {
        SD c;
        c.v = D1(x_star[k]);
        c.v.d[0] = d[k];
        c.d[k] = D1(1.0);
        xl[k] = c;
    }
    SD F = sdf_eval(root, xl, theta_values<SD>(theta));
    Vec3d n{F.d[0].v, F.d[1].v, F.d[2].v};
    Vec3d Hd{F.d[0].d[0], F.d[1].d[0], F.d[2].d[0]};
    double n2 = dot(n, n);
    if (!(n2 > 1e-16) || !std::isfinite(n2)) {
        ++stats.degenerate_skips;
        return;
    }

    // dLw/dn through the shading model
    Vec3<D3> nl{D3::lift(n.x, 0), D3::lift(n.y, 1), D3::lift(n.z, 2)};
    Vec3<D3> Lc = shade(nl, mat, theta_values<D3>(theta));
    D3 Lw3 = Lc.x * cw.x + Lc.y * cw.y + Lc.z * cw.z;
    Vec3d dLwdn{Lw3.d[0], Lw3.d[1], Lw3.d[2]};

    if (any_albedo) {
        for (int ch = 0; ch < 3; ++ch) {
            if (!mat.albedo[ch].is_slot()) continue;
            int slot = mat.albedo[ch].slot;
            auto tf = [&](int s_) {
                D1 v(theta[std::size_t(s_)]);
                if (s_ == slot) v.d[0] = 1.0;
                return v;
            };
            Vec3<D1> L1 = shade(to_vec<D1>(n), mat, tf);
            grad[std::size_t(slot)] +=
                scale * (L1.x.d[0] * cw.x + L1.y.d[0] * cw.y + L1.z.d[0] * cw.z);
        }
    }

    if (std::abs(dfdt) <= eps_graze) {
        ++stats.grazing_skips; // warp term carries the silhouette signal here
        return;
    }
    double dLwdt = dot(dLwdn, Hd);
    double a = -dLwdt / dfdt;
    accumulate_mixed_adjoint(root, theta, x_star, a, dLwdn, scale, grad);
}

} // namespace

void sample_gradient(const Scene& scene, const std::vector<double>& theta,
                     const Camera& camera, const Vec2d& u, const Vec3d& cw,
                     const GradConfig& cfg, const TraceOptions& opts, double scale,
                     std::span<double> grad, GradStats& stats) {
    const SdfNode& root = *scene.root;

    if (cfg.mode == GradMode::Naive) {
        Ray ray = camera.generate_ray(u);
        Trajectory traj = sphere_trace(root, theta, ray, opts);
        if (traj.status == TraceStatus::MaxSteps) ++stats.max_steps_rays;
        if (traj.hit)
            interior_term_at_hit(scene, theta, traj.x_star, ray.d, traj.grad_dot_d, cw,
                                 cfg.eps_graze, scale, grad, stats);
        return;
    }

    using W = D2;
    Vec2<W> ul{W::lift(u.x, 0), W::lift(u.y, 1)};
    RayT<W> ray = camera.generate_ray(ul);
    TrajectoryT<W> traj = sphere_trace(root, theta, ray, opts);
    if (traj.status == TraceStatus::MaxSteps) ++stats.max_steps_rays;

    Vec3<W> L = radiance_from_traj(root, theta, scene.material, traj);
    W Lw = L.x * cw.x + L.y * cw.y + L.z * cw.z;

    if (traj.hit)
        interior_term_at_hit(scene, theta, scalar_vec(traj.x_star), scalar_vec(ray.d),
                             scalar_value(traj.grad_dot_d), cw, cfg.eps_graze, scale, grad,
                             stats);

    // divergence term: div_u((cw.L) V) evaluated through screen tangents
    const size_t n = traj.points.size();
    if (n < 2) {
        ++stats.zero_warps;
        return;
    }
    const double lam = cfg.warp.lambda_eff(scene.bounding_radius);
    const double pad = cfg.warp.eps_pad(scene.bounding_radius);

    static thread_local std::vector<W> ts, wq;
    static thread_local std::vector<double> wqv;
    ts.resize(n);
    wq.resize(n);
    wqv.resize(n);
    for (size_t i = 0; i < n; ++i) ts[i] = traj.points[i].t;
    auto ivals = trapezoid_intervals(std::span<const W>(ts));
    for (size_t i = 0; i < n; ++i) {
        auto [fi, dfdti] = sdf_value_and_dir_deriv(root, traj.points[i].x, ray.d, theta);
        W sc = silhouette_score(fi, dfdti, lam);
        wq[i] = harmonic_weight(sc, cfg.warp.gamma, pad) * ivals[i];
        wqv[i] = scalar_value(wq[i]);
    }

    static thread_local std::vector<int> sel;
    int min_idx = -1;
    W shift(0.0);
    if (cfg.warp.k_all) {
        sel.resize(n);
        for (size_t i = 0; i < n; ++i) sel[i] = int(i);
    } else {
        sel = topk_indices(wqv, cfg.warp.k);
        min_idx = sel.back(); // smallest retained weight; shifts to exactly zero
        shift = wq[min_idx];
    }
    W den(0.0);
    for (int i : sel)
        if (i != min_idx) den += wq[i] - shift;
    if (!(scalar_value(den) > cfg.warp.eps_den)) {
        ++stats.zero_warps;
        return;
    }

    for (int i : sel) {
        if (i == min_idx) continue; // identically zero weight
        const auto& p = traj.points[size_t(i)];
        if (!camera.projection_valid(scalar_value(p.t))) {
            ++stats.degenerate_skips;
            continue;
        }
        Vec3<W> gvec = sdf_spatial_gradient(root, p.x, theta);
        W n2 = dot(gvec, gvec);
        if (!is_finite(n2) || !(scalar_value(n2) > 1e-16)) {
            ++stats.degenerate_skips;
            continue;
        }
        auto proj = camera.screen_projection(ray.u, p.t);
        Vec2<W> b = proj.apply(gvec / n2);
        W om = (wq[size_t(i)] - shift) / den;
        W c0 = Lw * om * b.x;
        W c1 = Lw * om * b.y;
        double alpha = c0.d[0] + c1.d[1];
        Vec3d dxdu0{p.x.x.d[0], p.x.y.d[0], p.x.z.d[0]};
        Vec3d dxdu1{p.x.x.d[1], p.x.y.d[1], p.x.z.d[1]};
        Vec3d gdir = dxdu0 * c0.v + dxdu1 * c1.v;
        accumulate_mixed_adjoint(root, theta, scalar_vec(p.x), alpha, gdir, -scale, grad);
    }
}

namespace {

struct EdgeSpec {
    int axis, i, j;   // shared edge id: neighbors reference the same (axis, i, j)
    Vec2d base, dir;  // parametric segment: base + r*dir, r in [0,1)
    Vec2d nrm;        // outward normal of the owning domain
    double len;
};

void edge_contribution(const Scene& scene, const std::vector<double>& theta,
                       const Camera& camera, const EdgeSpec& e, const Vec3d& cw,
                       const GradConfig& cfg, const TraceOptions& opts, double scale,
                       std::span<double> grad, GradStats& stats) {
    const SdfNode& root = *scene.root;
    for (int s = 0; s < cfg.boundary_spp; ++s) {
        Rng rng = Rng::keyed({cfg.seed, kStreamEdge, std::uint64_t(e.axis),
                              std::uint64_t(e.i), std::uint64_t(e.j), std::uint64_t(s),
                              std::uint64_t(cfg.iteration)});
        double r = (s + rng.next_double()) / cfg.boundary_spp;
        Vec2d u = e.base + e.dir * r;
        Ray ray = camera.generate_ray(u);
        Trajectory traj = sphere_trace(root, theta, ray, opts);
        if (traj.status == TraceStatus::MaxSteps) ++stats.max_steps_rays;
        Vec3d L = radiance_from_traj(root, theta, scene.material, traj);
        double Lw = dot(L, cw);
        WarpField field = warp_field(root, theta, camera, ray, traj, cfg.warp,
                                     scene.bounding_radius);
        stats.degenerate_skips += field.degenerate_skipped;
        if (field.zero) {
            ++stats.zero_warps;
            continue;
        }
        // negative sign: the flux leaves the owning domain
        accumulate_V_contraction(root, theta, field, e.nrm,
                                 -scale * Lw * e.len / cfg.boundary_spp, grad);
    }
}

} // namespace

void pixel_boundary_gradient(const Scene& scene, const std::vector<double>& theta,
                             const Camera& camera, int px, int py, const Vec3d& cw,
                             const GradConfig& cfg, const TraceOptions& opts, double scale,
                             std::span<double> grad, GradStats& stats) {
    if (cfg.mode == GradMode::Naive) return;
    const Film& film = camera.film;
    const double ex = film.extent, ey = film.extent_y();
    const double psx = ex / film.width, psy = ey / film.height;
    const double x0 = -0.5 * ex + px * psx;
    const double y0 = -0.5 * ey + py * psy;

    const EdgeSpec edges[4] = {
        {0, px, py, {x0, y0}, {0.0, psy}, {-1.0, 0.0}, psy},          // left
        {0, px + 1, py, {x0 + psx, y0}, {0.0, psy}, {1.0, 0.0}, psy}, // right
        {1, px, py, {x0, y0}, {psx, 0.0}, {0.0, -1.0}, psx},          // bottom
        {1, px, py + 1, {x0, y0 + psy}, {psx, 0.0}, {0.0, 1.0}, psx}, // top
    };
    for (const EdgeSpec& e : edges)
        edge_contribution(scene, theta, camera, e, cw, cfg, opts, scale, grad, stats);
}

void film_rim_gradient(const Scene& scene, const std::vector<double>& theta,
                       const Camera& camera, const Vec3d& cw, const GradConfig& cfg,
                       const TraceOptions& opts, double scale, std::span<double> grad,
                       GradStats& stats) {
    if (cfg.mode == GradMode::Naive) return;
    const Film& film = camera.film;
    const double ex = film.extent, ey = film.extent_y();
    const double psx = ex / film.width, psy = ey / film.height;
    const double x0 = -0.5 * ex, y0 = -0.5 * ey;
    for (int j = 0; j < film.height; ++j) {
        edge_contribution(scene, theta, camera,
                          {0, 0, j, {x0, y0 + j * psy}, {0.0, psy}, {-1.0, 0.0}, psy}, cw,
                          cfg, opts, scale, grad, stats);
        edge_contribution(scene, theta, camera,
                          {0, film.width, j, {x0 + ex, y0 + j * psy}, {0.0, psy}, {1.0, 0.0},
                           psy},
                          cw, cfg, opts, scale, grad, stats);
    }
    for (int i = 0; i < film.width; ++i) {
        edge_contribution(scene, theta, camera,
                          {1, i, 0, {x0 + i * psx, y0}, {psx, 0.0}, {0.0, -1.0}, psx}, cw,
                          cfg, opts, scale, grad, stats);
        edge_contribution(scene, theta, camera,
                          {1, i, film.height, {x0 + i * psx, y0 + ey}, {psx, 0.0},
                           {0.0, 1.0}, psx},
                          cw, cfg, opts, scale, grad, stats);
    }
}

void accumulate_pixel_gradient(const Scene& scene, const std::vector<double>& theta,
                               const Camera& camera, int px, int py, const Vec3d& cw,
                               const GradConfig& cfg, const TraceOptions& opts, double scale,
                               std::span<double> grad, GradStats& stats) {
    const double area = camera.pixel_area();
    for (int s = 0; s < cfg.interior_spp; ++s) {
        Vec2d u = gradient_sample_u(camera, px, py, s, cfg.interior_spp, cfg.seed,
                                    cfg.iteration);
        sample_gradient(scene, theta, camera, u, cw, cfg, opts,
                        scale * area / cfg.interior_spp, grad, stats);
    }
    pixel_boundary_gradient(scene, theta, camera, px, py, cw, cfg, opts, scale, grad, stats);
}

double fd_pixel_gradient(const Scene& scene, const std::vector<double>& theta,
                         const Camera& camera, int px, int py, int slot, double h, int spp,
                         const Vec3d& cw, std::uint64_t seed) {
    TraceOptions opts = default_trace_options(scene);
    std::vector<double> tp = theta, tm = theta;
    tp[std::size_t(slot)] += h;
    tm[std::size_t(slot)] -= h;
    Vec3d Ip = render_pixel(scene, tp, camera, px, py, spp, seed, 0, opts);
    Vec3d Im = render_pixel(scene, tm, camera, px, py, spp, seed, 0, opts);
    return dot(Ip - Im, cw) / (2.0 * h) * camera.pixel_area();
}

GradientImage gradient_image(const Scene& scene, const std::vector<double>& theta,
                             const Camera& camera, const ParamSelector& sel,
                             const GradConfig& cfg, int threads, GradStats* stats_out) {
    const int W = camera.film.width, H = camera.film.height;
    GradientImage out;
    out.value = ImageF(W, H);
    out.variance = ImageF(W, H);
    out.spp = cfg.interior_spp;
    TraceOptions opts = default_trace_options(scene);
    const Vec3d cw{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const double area = camera.pixel_area();
    std::vector<GradStats> per_worker(std::max(1, threads));

    parallel_for(long(W) * H, threads, [&](long lo, long hi, int w) {
        std::vector<double> grad(theta.size(), 0.0);
        GradStats& stats = per_worker[w];
        for (long pix = lo; pix < hi; ++pix) {
            int px = int(pix % W), py = int(pix / W);
            std::fill(grad.begin(), grad.end(), 0.0);
            double mean = 0.0, m2 = 0.0;
            double prev = 0.0;
            for (int s = 0; s < cfg.interior_spp; ++s) {
                Vec2d u = gradient_sample_u(camera, px, py, s, cfg.interior_spp, cfg.seed,
                                            cfg.iteration);
                sample_gradient(scene, theta, camera, u, cw, cfg, opts,
                                area / cfg.interior_spp, grad, stats);
                double cur = sel.pick(grad);
                double v = (cur - prev) * cfg.interior_spp; // per-sample integrand
                prev = cur;
                double delta = v - mean;
                mean += delta / (s + 1);
                m2 += delta * (v - mean);
            }
            pixel_boundary_gradient(scene, theta, camera, px, py, cw, cfg, opts, 1.0, grad,
                                    stats);
            out.value.at(px, py) = sel.pick(grad);
            out.variance.at(px, py) =
                cfg.interior_spp > 1 ? m2 / (cfg.interior_spp - 1) : 0.0;
        }
    });
    if (stats_out)
        for (const auto& s : per_worker) stats_out->add(s);
    return out;
}

ImageF fd_gradient_image(const Scene& scene, const std::vector<double>& theta,
                         const Camera& camera, int slot, double h, int spp,
                         std::uint64_t seed, int threads) {
    const int W = camera.film.width, H = camera.film.height;
    ImageF out(W, H);
    const Vec3d cw{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    parallel_for(long(W) * H, threads, [&](long lo, long hi, int) {
        for (long pix = lo; pix < hi; ++pix) {
            int px = int(pix % W), py = int(pix / W);
            out.at(px, py) = fd_pixel_gradient(scene, theta, camera, px, py, slot, h, spp,
                                               cw, seed);
        }
    });
    return out;
}

double eq4_fd_pixel(const Scene& scene, const std::vector<double>& theta, const Camera& camera,
                    int px, int py, int slot, double h, const GradConfig& cfg) {
    const SdfNode& root = *scene.root;
    TraceOptions opts = default_trace_options(scene);
    const Vec3d cw{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    const double lam = cfg.warp.lambda_eff(scene.bounding_radius);
    const double pad = cfg.warp.eps_pad(scene.bounding_radius);
    double acc = 0.0;

    for (int s = 0; s < cfg.interior_spp; ++s) {
        Vec2d u = gradient_sample_u(camera, px, py, s, cfg.interior_spp, cfg.seed,
                                    cfg.iteration);
        // V_slot(u) with its screen Jacobian, warp frozen at theta
        using W = D2;
        Vec2<W> ul{W::lift(u.x, 0), W::lift(u.y, 1)};
        RayT<W> ray = camera.generate_ray(ul);
        TrajectoryT<W> traj = sphere_trace(root, theta, ray, opts);
        Vec2<W> Vj{W(0.0), W(0.0)};
        const size_t n = traj.points.size();
        if (n >= 2) {
            std::vector<W> ts(n), wq(n);
            std::vector<double> wqv(n);
            for (size_t i = 0; i < n; ++i) ts[i] = traj.points[i].t;
            auto ivals = trapezoid_intervals(std::span<const W>(ts));
            for (size_t i = 0; i < n; ++i) {
                auto [fi, dfdti] =
                    sdf_value_and_dir_deriv(root, traj.points[i].x, ray.d, theta);
                wq[i] = harmonic_weight(silhouette_score(fi, dfdti, lam), cfg.warp.gamma,
                                        pad) *
                        ivals[i];
                wqv[i] = scalar_value(wq[i]);
            }
            std::vector<int> sel;
            int min_idx = -1;
            W shift(0.0);
            if (cfg.warp.k_all) {
                sel.resize(n);
                for (size_t i = 0; i < n; ++i) sel[i] = int(i);
            } else {
                sel = topk_indices(wqv, cfg.warp.k);
                min_idx = sel.back();
                shift = wq[size_t(min_idx)];
            }
            W den(0.0);
            for (int i : sel)
                if (i != min_idx) den += wq[size_t(i)] - shift;
            if (scalar_value(den) > cfg.warp.eps_den) {
                for (int i : sel) {
                    if (i == min_idx) continue;
                    const auto& p = traj.points[size_t(i)];
                    if (!camera.projection_valid(scalar_value(p.t))) continue;
                    Vec3<W> gvec = sdf_spatial_gradient(root, p.x, theta);
                    W n2 = dot(gvec, gvec);
                    if (!is_finite(n2) || !(scalar_value(n2) > 1e-16)) continue;
                    auto proj = camera.screen_projection(ray.u, p.t);
                    Vec2<W> b = proj.apply(gvec / n2);
                    W om = (wq[size_t(i)] - shift) / den;
                    W a(0.0);
                    sdf_backward(root, p.x, theta, W(1.0),
                                 [&](int s_, const W& v) {
                                     if (s_ == slot) a += v;
                                 },
                                 static_cast<Vec3<W>*>(nullptr));
                    Vj.x += b.x * om * (-a);
                    Vj.y += b.y * om * (-a);
                }
            }
        }
        Vec2d V{Vj.x.v, Vj.y.v};
        double J00 = Vj.x.d[0], J01 = Vj.x.d[1], J10 = Vj.y.d[0], J11 = Vj.y.d[1];
        double side[2];
        for (int sgn = 0; sgn < 2; ++sgn) {
            double hs = sgn == 0 ? h : -h;
            std::vector<double> th = theta;
            th[std::size_t(slot)] += hs;
            Vec2d Tu = u + V * hs;
            double det = std::abs((1.0 + hs * J00) * (1.0 + hs * J11) -
                                  hs * J01 * hs * J10);
            Vec3d L = radiance(scene, th, camera, Tu, opts);
            side[sgn] = dot(L, cw) * det;
        }
        acc += (side[0] - side[1]) / (2.0 * h);
    }
    return acc / cfg.interior_spp * camera.pixel_area();
}

PixelClass classify_pixel(const Scene& scene, const std::vector<double>& theta,
                          const Camera& camera, int px, int py, const TraceOptions& opts) {
    const double offs[5][2] = {{0.1, 0.1}, {0.9, 0.1}, {0.1, 0.9}, {0.9, 0.9}, {0.5, 0.5}};
    int hits = 0;
    double tmin = 1e300, tmax = -1e300;
    for (auto& o : offs) {
        Vec2d u = camera.screen_of_pixel(px + o[0], py + o[1]);
        Ray ray = camera.generate_ray(u);
        Trajectory traj = sphere_trace(*scene.root, theta, ray, opts);
        if (traj.hit) {
            ++hits;
            tmin = std::min(tmin, traj.t_star);
            tmax = std::max(tmax, traj.t_star);
        }
    }
    if (hits == 0) return PixelClass::Empty;
    if (hits < 5) return PixelClass::Silhouette;
    if (tmax - tmin > 0.15 * scene.bounding_radius) return PixelClass::Silhouette;
    return PixelClass::Interior;
}

GradCheckReport run_gradcheck(const Scene& scene, const std::vector<double>& theta,
                              int slot, const GradCheckConfig& cfg) {
    GradCheckReport rep;
    ParamSelector sel;
    sel.slot = slot;

    GradConfig gw;
    gw.mode = GradMode::Warped;
    gw.interior_spp = cfg.interior_spp;
    gw.boundary_spp = cfg.boundary_spp;
    gw.warp = cfg.warp;
    gw.seed = cfg.seed;
    rep.warped = gradient_image(scene, theta, scene.camera, sel, gw, cfg.threads);

    GradConfig gn = gw;
    gn.mode = GradMode::Naive;
    rep.naive = gradient_image(scene, theta, scene.camera, sel, gn, cfg.threads);

    rep.fd = fd_gradient_image(scene, theta, scene.camera, slot, cfg.fd_h, cfg.fd_spp,
                               cfg.seed, cfg.threads);

    TraceOptions opts = default_trace_options(scene);
    const int W = scene.camera.film.width, H = scene.camera.film.height;

    auto pearson = [&](const ImageF& a, const ImageF& b) {
        double ma = 0, mb = 0;
        long n = long(W) * H;
        for (long i = 0; i < n; ++i) {
            ma += a.data[std::size_t(i)];
            mb += b.data[std::size_t(i)];
        }
        ma /= n;
        mb /= n;
        double sab = 0, saa = 0, sbb = 0;
        for (long i = 0; i < n; ++i) {
            double da = a.data[std::size_t(i)] - ma, db = b.data[std::size_t(i)] - mb;
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
        // two flat images agree; correlation is undefined but the check is vacuous
        if (saa < 1e-30 && sbb < 1e-30) return 1.0;
        return sab / std::sqrt(std::max(saa * sbb, 1e-300));
    };
    rep.pearson_warped = pearson(rep.warped.value, rep.fd);
    rep.pearson_naive = pearson(rep.naive.value, rep.fd);

    for (int py = 0; py < H; ++py)
        for (int px = 0; px < W; ++px) {
            PixelClass c = classify_pixel(scene, theta, scene.camera, px, py, opts);
            auto& st = rep.cls[int(c)];
            ++st.count;
            double fd = rep.fd.at(px, py);
            st.fd_mean_abs += std::abs(fd);
            st.mae_warped += std::abs(rep.warped.value.at(px, py) - fd);
            st.mae_naive += std::abs(rep.naive.value.at(px, py) - fd);
        }
    for (auto& st : rep.cls)
        if (st.count > 0) {
            st.fd_mean_abs /= st.count;
            st.mae_warped /= st.count;
            st.mae_naive /= st.count;
        }
    return rep;
}

} // namespace warpsdf
