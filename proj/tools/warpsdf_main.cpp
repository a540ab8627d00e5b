// warpsdf command line: render / gradcheck / weights-dump / lemma-check / fit.
// Exit codes: 0 success, 1 tolerance failure, 2 usage or config error,
// 3 numerical error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "warpsdf/gradient.hpp"
#include "warpsdf/optimize.hpp"
#include "warpsdf/scene_io.hpp"

using namespace warpsdf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string scene_path, config_path, out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
    std::string mode = "warped";
    std::string param;
    double gamma = -1.0, lambda_d = -1.0;
    int k = 0; // 0: default, -1: all
    int spp = 0;
    int level = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_scene = true) {
    auto* s = cmd->add_option("--scene", o.scene_path, "scene JSON file");
    if (needs_scene) s->required();
    cmd->add_option("--config", o.config_path, "command config JSON");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    cmd->add_option("--mode", o.mode, "gradient mode: warped|naive");
    cmd->add_option("--param", o.param, "parameter name or index");
    cmd->add_option("--gamma", o.gamma, "harmonic weight exponent");
    cmd->add_option("--lambda-d", o.lambda_d, "silhouette characteristic blend");
    cmd->add_option("--k", o.k, "top-k subset size (-1 = all points)");
    cmd->add_option("--spp", o.spp, "samples per pixel");
    cmd->add_option("--level", o.level, "pyramid level");
}

int effective_threads(int t) {
    if (t > 0) return t;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? int(hw) : 1;
}

void apply_warp_flags(WarpConfig& w, const CommonOpts& o) {
    if (o.gamma > 0) w.gamma = o.gamma;
    if (o.lambda_d > 0) w.lambda_d = o.lambda_d;
    if (o.k == -1) {
        w.k_all = true;
    } else if (o.k > 0) {
        w.k = o.k;
        w.k_all = false;
    }
}

json load_config(const std::string& path, std::initializer_list<const char*> allowed) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("config: unknown key '" + it.key() + "'");
    }
    return j;
}

void write_summary(const std::string& out_dir, const json& summary) {
    std::ofstream out(out_dir + "/summary.json");
    out << summary.dump(2) << "\n";
}

GradMode parse_mode(const std::string& m) {
    if (m == "warped") return GradMode::Warped;
    if (m == "naive") return GradMode::Naive;
    throw ConfigError("unknown mode '" + m + "' (use warped|naive)");
}

int cmd_render(const CommonOpts& o) {
    Scene scene = load_scene(o.scene_path);
    fs::create_directories(o.out_dir);
    int spp = o.spp > 0 ? o.spp : 16;
    Camera cam = scene.camera.at_level(o.level);
    RenderCounters rc;
    Image img = render_image(scene, scene.theta0, cam, spp, o.seed,
                             effective_threads(o.threads), 0, &rc);
    write_pfm(o.out_dir + "/render.pfm", img);
    write_ppm(o.out_dir + "/render.ppm", img);
    json summary{{"command", "render"},
                 {"scene", scene.name},
                 {"spp", spp},
                 {"seed", o.seed},
                 {"width", cam.film.width},
                 {"height", cam.film.height},
                 {"max_steps_rays", rc.max_steps_rays}};
    write_summary(o.out_dir, summary);
    std::printf("rendered %dx%d spp=%d -> %s/render.{pfm,ppm}\n", cam.film.width,
                cam.film.height, spp, o.out_dir.c_str());
    return 0;
}

int cmd_gradcheck(const CommonOpts& o) {
    json cfgj = load_config(o.config_path,
                            {"interior_spp", "boundary_spp", "fd_spp", "fd_h", "corr_tol",
                             "sil_tol", "warp"});
    Scene scene = load_scene(o.scene_path);
    fs::create_directories(o.out_dir);
    if (o.param.empty()) throw ConfigError("gradcheck requires --param");
    int slot = resolve_param(scene, o.param);
    if (slot < 0) throw ConfigError("unknown parameter '" + o.param + "'");

    GradCheckConfig gc;
    gc.interior_spp = o.spp > 0 ? o.spp : cfgj.value("interior_spp", 256);
    gc.boundary_spp = cfgj.value("boundary_spp", 16);
    gc.fd_spp = cfgj.value("fd_spp", 1024);
    gc.fd_h = cfgj.value("fd_h", 1e-3);
    gc.seed = o.seed;
    gc.threads = effective_threads(o.threads);
    apply_warp_flags(gc.warp, o);
    double corr_tol = cfgj.value("corr_tol", 0.95);
    double sil_tol = cfgj.value("sil_tol", 0.10);

    GradCheckReport rep = run_gradcheck(scene, scene.theta0, slot, gc);
    write_pfm(o.out_dir + "/grad_warped.pfm", rep.warped.value);
    write_pfm(o.out_dir + "/grad_naive.pfm", rep.naive.value);
    write_pfm(o.out_dir + "/grad_fd.pfm", rep.fd);

    std::ofstream csv(o.out_dir + "/gradcheck.csv");
    csv << "class,count,fd_mean_abs,mae_warped,mae_naive\n";
    const char* names[3] = {"empty", "interior", "silhouette"};
    for (int c = 0; c < 3; ++c) {
        const auto& st = rep.cls[c];
        csv << names[c] << "," << st.count << "," << st.fd_mean_abs << "," << st.mae_warped
            << "," << st.mae_naive << "\n";
    }

    const auto& sil = rep.cls[int(PixelClass::Silhouette)];
    GradMode mode = parse_mode(o.mode);
    double sil_scale = std::max(sil.fd_mean_abs, 1e-300);
    double mae = mode == GradMode::Warped ? sil.mae_warped : sil.mae_naive;
    double corr = mode == GradMode::Warped ? rep.pearson_warped : rep.pearson_naive;
    bool pass = corr > corr_tol && (sil.count == 0 || mae < sil_tol * sil_scale);

    json summary{{"command", "gradcheck"},
                 {"scene", scene.name},
                 {"param", o.param},
                 {"mode", o.mode},
                 {"pearson_warped", rep.pearson_warped},
                 {"pearson_naive", rep.pearson_naive},
                 {"silhouette_fd_mean_abs", sil.fd_mean_abs},
                 {"silhouette_mae_warped", sil.mae_warped},
                 {"silhouette_mae_naive", sil.mae_naive},
                 {"pass", pass}};
    write_summary(o.out_dir, summary);
    std::printf("gradcheck %s: corr=%.4f sil_rel=%.4f -> %s\n", o.mode.c_str(), corr,
                sil.count ? mae / sil_scale : 0.0, pass ? "pass" : "FAIL");
    return pass ? 0 : 1;
}

int cmd_weights_dump(const CommonOpts& o) {
    json cfgj = load_config(o.config_path, {"rays_px", "warp"});
    Scene scene = load_scene(o.scene_path);
    fs::create_directories(o.out_dir);
    WarpConfig wc;
    wc.allow_diagnostic_gamma = true;
    apply_warp_flags(wc, o);
    TraceOptions opts = default_trace_options(scene);

    std::vector<std::pair<double, double>> rays;
    if (cfgj.contains("rays_px"))
        for (const auto& r : cfgj["rays_px"]) rays.emplace_back(r[0].get<double>(), r[1].get<double>());
    if (rays.empty()) {
        // default: a horizontal scanline through the film center
        for (int i = 0; i < scene.camera.film.width; ++i)
            rays.emplace_back(i + 0.5, scene.camera.film.height / 2.0);
    }

    std::ofstream csv(o.out_dir + "/weights.csv");
    csv << "ray_id,i,t_i,f_i,S_i,w_i,wq_i,wk_i,omega_bar_i\n";
    for (size_t rid = 0; rid < rays.size(); ++rid) {
        Vec2d u = scene.camera.screen_of_pixel(rays[rid].first, rays[rid].second);
        Ray ray = scene.camera.generate_ray(u);
        Trajectory traj = sphere_trace(*scene.root, scene.theta0, ray, opts);
        if (traj.points.size() < 2) continue;
        RayWeights rw = compute_ray_weights(*scene.root, scene.theta0, traj, ray.d, wc,
                                            scene.bounding_radius);
        char line[256];
        for (size_t i = 0; i < rw.t.size(); ++i) {
            std::snprintf(line, sizeof line, "%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                          rid, i, rw.t[i], rw.f[i], rw.score[i], rw.w[i], rw.wq[i], rw.wk[i],
                          rw.omega[i]);
            csv << line;
        }
    }
    json summary{{"command", "weights-dump"}, {"rays", rays.size()},
                 {"gamma", wc.gamma}, {"k", wc.k_all ? -1 : wc.k}};
    write_summary(o.out_dir, summary);
    std::printf("dumped weights for %zu rays -> %s/weights.csv\n", rays.size(),
                o.out_dir.c_str());
    return 0;
}

int cmd_lemma_check(const CommonOpts& o) {
    json cfgj = load_config(o.config_path,
                            {"distances", "kronecker_threshold", "silhouette_u", "probe_dir",
                             "bound_r_l", "bound_deltas", "scan_from", "scan_to",
                             "scan_points", "max_steps", "warp"});
    Scene scene = load_scene(o.scene_path);
    fs::create_directories(o.out_dir);
    WarpConfig wc;
    apply_warp_flags(wc, o);
    TraceOptions opts = default_trace_options(scene);
    opts.max_steps = cfgj.value("max_steps", 4096);

    // probe toward the analytic silhouette along +x (circle scene default)
    double u_sil = cfgj.value("silhouette_u", scene.bounding_radius);
    double dir = cfgj.value("probe_dir", 1.0);
    std::vector<double> dists = cfgj.value("distances",
                                           std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4});
    double footprint = scene.camera.film.extent;
    std::vector<Vec2d> us;
    for (double d : dists) us.push_back({u_sil + dir * d * footprint, 0.0});

    WarpConfig wc2 = wc;
    wc2.gamma = 2.0;
    wc2.allow_diagnostic_gamma = true;
    auto probe4 = kronecker_probe(*scene.root, scene.theta0, scene.camera, us, wc, opts,
                                  scene.bounding_radius);
    auto probe2 = kronecker_probe(*scene.root, scene.theta0, scene.camera, us, wc2, opts,
                                  scene.bounding_radius);

    double thresh = cfgj.value("kronecker_threshold", 0.99);
    bool monotone = true;
    for (size_t i = 0; i + 1 < probe4.size(); ++i)
        if (probe4[i + 1] < probe4[i]) monotone = false;
    bool kron4 = !probe4.empty() && probe4.back() >= thresh && monotone;
    bool kron2_fails = probe2.empty() || probe2.back() < thresh;

    // lower-bound divergence table
    double rl = cfgj.value("bound_r_l", scene.bounding_radius);
    std::vector<double> bd = cfgj.value("bound_deltas",
                                        std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4, 1e-5});
    json bound4 = json::array(), bound2 = json::array();
    for (double d : bd) {
        bound4.push_back(lemma_bound_eval(d, rl, wc.lambda_d, wc.gamma));
        bound2.push_back(lemma_bound_eval(d, rl, wc.lambda_d, 2.0));
    }
    bool bound_diverges = bd.size() >= 2 &&
                          bound4.back().get<double>() > 10.0 * bound4[bd.size() - 2].get<double>();
    bool bound_plateaus = bd.size() >= 2 &&
                          bound2.back().get<double>() < 1.5 * bound2[bd.size() - 2].get<double>();

    // top-k continuity scan
    int slot = o.param.empty() ? 0 : resolve_param(scene, o.param);
    if (slot < 0) throw ConfigError("unknown parameter '" + o.param + "'");
    double s_from = cfgj.value("scan_from", 0.85 * scene.bounding_radius);
    double s_to = cfgj.value("scan_to", 0.999 * scene.bounding_radius);
    int s_n = cfgj.value("scan_points", 10000);
    TraceOptions sopts = default_trace_options(scene);
    TopkScanResult scan = topk_continuity_scan(*scene.root, scene.theta0, scene.camera, slot,
                                               {s_from, 0.0}, {s_to, 0.0}, s_n, wc, sopts,
                                               scene.bounding_radius);
    bool scan_ok = scan.swap_events >= 5 && scan.worst_swap_ratio < 1e-9 &&
                   scan.worst_jump_factor <= 5.0;

    json summary{{"command", "lemma-check"},
                 {"kronecker_gamma4", probe4},
                 {"kronecker_gamma2", probe2},
                 {"kronecker_threshold", thresh},
                 {"kronecker_gamma4_pass", kron4},
                 {"kronecker_gamma2_fails_as_predicted", kron2_fails},
                 {"bound_gamma4", bound4},
                 {"bound_gamma2", bound2},
                 {"bound_diverges_gamma4", bound_diverges},
                 {"bound_plateaus_gamma2", bound_plateaus},
                 {"scan_swap_events", scan.swap_events},
                 {"scan_trajectory_events", scan.trajectory_events},
                 {"scan_worst_swap_ratio", scan.worst_swap_ratio},
                 {"scan_worst_jump_factor", scan.worst_jump_factor},
                 {"scan_pass", scan_ok}};
    write_summary(o.out_dir, summary);
    bool pass = kron4 && kron2_fails && bound_diverges && bound_plateaus && scan_ok;
    std::printf("lemma-check: kronecker(g=4) %s, kronecker(g=2) %s, bounds %s, scan %s\n",
                kron4 ? "pass" : "FAIL", kron2_fails ? "fails as predicted" : "UNEXPECTED",
                (bound_diverges && bound_plateaus) ? "pass" : "FAIL",
                scan_ok ? "pass" : "FAIL");
    return pass ? 0 : 1;
}

int cmd_fit(const CommonOpts& o) {
    json cfgj = load_config(o.config_path, {"dataset", "optim", "init"});
    Scene scene = load_scene(o.scene_path);
    fs::create_directories(o.out_dir);
    if (!cfgj.contains("dataset")) throw ConfigError("fit: config needs a 'dataset' section");

    Dataset data;
    fs::path cfg_dir = fs::path(o.config_path).parent_path();
    for (const auto& vj : cfgj["dataset"].at("views")) {
        View v;
        Scene cam_holder = parse_scene(json{{"camera", vj.at("camera")}}.dump());
        v.camera = cam_holder.camera;
        fs::path img = vj.at("image").get<std::string>();
        if (img.is_relative()) img = cfg_dir / img;
        v.target = read_pfm(img.string());
        data.views.push_back(std::move(v));
    }

    OptimConfig oc;
    if (cfgj.contains("optim")) {
        const json& oj = cfgj["optim"];
        oc.iterations = oj.value("iterations", oc.iterations);
        oc.pixels_per_iter = oj.value("pixels_per_iter", oc.pixels_per_iter);
        oc.interior_spp = oj.value("interior_spp", oc.interior_spp);
        oc.boundary_spp = oj.value("boundary_spp", oc.boundary_spp);
        oc.adam.lr = oj.value("lr", oc.adam.lr);
        oc.eikonal_weight = oj.value("eikonal_weight", oc.eikonal_weight);
        oc.eikonal_samples = oj.value("eikonal_samples", oc.eikonal_samples);
        oc.pyramid_levels = oj.value("pyramid_levels", oc.pyramid_levels);
        oc.checkpoint_every = oj.value("checkpoint_every", oc.checkpoint_every);
    }
    oc.mode = parse_mode(o.mode);
    apply_warp_flags(oc.warp, o);
    oc.seed = o.seed;
    oc.threads = effective_threads(o.threads);
    oc.checkpoint_dir = o.out_dir;
    data.build_pyramid(oc.pyramid_levels);

    if (cfgj.contains("init") && cfgj["init"].contains("geometric")) {
        const json& gj = cfgj["init"]["geometric"];
        double r0 = gj.value("r0", 0.5);
        std::function<void(const SdfNode&)> walk = [&](const SdfNode& n) {
            if (n.kind == SdfKind::Mlp)
                geometric_init(*n.mlp, o.seed, r0, scene.theta0);
            for (const auto& c : n.children) walk(*c);
        };
        walk(*scene.root);
    }

    FitResult res = fit(scene, data, oc);
    write_history_csv(o.out_dir + "/history.csv", res.history);
    write_theta(o.out_dir + "/best.theta", res.theta_best);
    write_theta(o.out_dir + "/final.theta", res.theta_final);
    save_scene(o.out_dir + "/fitted_scene.json", scene, &res.theta_best);

    json summary{{"command", "fit"},
                 {"iterations", int(res.history.size())},
                 {"best_loss", res.best_loss},
                 {"best_iteration", res.best_iteration},
                 {"diverged", res.diverged},
                 {"grazing_skips", res.stats.grazing_skips},
                 {"zero_warps", res.stats.zero_warps}};
    write_summary(o.out_dir, summary);
    std::printf("fit: %d iterations, best loss %.6g at %d%s\n", int(res.history.size()),
                res.best_loss, res.best_iteration, res.diverged ? " (DIVERGED)" : "");
    return res.diverged ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"warpsdf: differentiable SDF renderer with warped-area silhouette gradients"};
    app.require_subcommand(1);

    CommonOpts ro, go, wo, lo, fo;
    auto* render = app.add_subcommand("render", "render a scene to PFM/PPM");
    add_common(render, ro);
    auto* gradcheck = app.add_subcommand("gradcheck", "compare warped/naive gradients to FD");
    add_common(gradcheck, go);
    auto* wdump = app.add_subcommand("weights-dump", "per-ray warp weight CSV");
    add_common(wdump, wo);
    auto* lemma = app.add_subcommand("lemma-check", "weight-lemma diagnostics");
    add_common(lemma, lo);
    auto* fitc = app.add_subcommand("fit", "inverse-rendering optimization");
    add_common(fitc, fo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }

    try {
        if (render->parsed()) return cmd_render(ro);
        if (gradcheck->parsed()) return cmd_gradcheck(go);
        if (wdump->parsed()) return cmd_weights_dump(wo);
        if (lemma->parsed()) return cmd_lemma_check(lo);
        if (fitc->parsed()) return cmd_fit(fo);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
