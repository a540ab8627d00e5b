#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "warpsdf/gradient.hpp"
#include "warpsdf/optimize.hpp"
#include "warpsdf/scene_io.hpp"

namespace py = pybind11;
using namespace warpsdf;

namespace {

py::array_t<float> image_to_numpy(const Image& img) {
    py::array_t<float> out({img.height, img.width, 3});
    std::memcpy(out.mutable_data(), img.data.data(), sizeof(float) * img.data.size());
    return out;
}

py::array_t<double> imagef_to_numpy(const ImageF& img) {
    py::array_t<double> out({img.height, img.width});
    std::memcpy(out.mutable_data(), img.data.data(), sizeof(double) * img.data.size());
    return out;
}

Image numpy_to_image(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw py::value_error("expected an (H, W, 3) float array");
    Image img(int(arr.shape(1)), int(arr.shape(0)));
    std::memcpy(img.data.data(), arr.data(), sizeof(float) * img.data.size());
    return img;
}

std::vector<double> theta_or_default(const Scene& scene, py::object theta) {
    if (theta.is_none()) return scene.theta0;
    auto arr = py::cast<py::array_t<double, py::array::c_style | py::array::forcecast>>(theta);
    std::vector<double> out(arr.size());
    std::memcpy(out.data(), arr.data(), sizeof(double) * out.size());
    if (out.size() != scene.theta0.size())
        throw py::value_error("theta has the wrong length");
    return out;
}

WarpConfig warp_from_kwargs(double gamma, double lambda_d, int k) {
    WarpConfig w;
    if (gamma > 0) w.gamma = gamma;
    if (lambda_d > 0) w.lambda_d = lambda_d;
    if (k == -1)
        w.k_all = true;
    else if (k > 0)
        w.k = k;
    return w;
}

int resolve_or_throw(const Scene& scene, const std::string& spec) {
    int slot = resolve_param(scene, spec);
    if (slot < 0) throw py::value_error("unknown parameter '" + spec + "'");
    return slot;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Differentiable SDF renderer with warped-area silhouette gradients";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<NumericalError>(m, "NumericalError");
    py::register_exception<InsideStartError>(m, "InsideStartError");

    py::class_<Camera>(m, "Camera")
        .def_static(
            "orthographic",
            [](std::array<double, 3> pos, std::array<double, 3> target,
               std::array<double, 3> up, int width, int height, double extent) {
                return Camera::look_at(Camera::Kind::Orthographic, {pos[0], pos[1], pos[2]},
                                       {target[0], target[1], target[2]}, {up[0], up[1], up[2]},
                                       Film{width, height, extent});
            },
            py::arg("position"), py::arg("look_at"), py::arg("up") = std::array<double, 3>{0, 1, 0},
            py::arg("width") = 64, py::arg("height") = 64, py::arg("extent") = 3.0)
        .def_static(
            "pinhole",
            [](std::array<double, 3> pos, std::array<double, 3> target,
               std::array<double, 3> up, int width, int height, double fov_deg) {
                return Camera::look_at(Camera::Kind::Pinhole, {pos[0], pos[1], pos[2]},
                                       {target[0], target[1], target[2]}, {up[0], up[1], up[2]},
                                       Film{width, height, 3.0}, fov_deg);
            },
            py::arg("position"), py::arg("look_at"), py::arg("up") = std::array<double, 3>{0, 1, 0},
            py::arg("width") = 64, py::arg("height") = 64, py::arg("fov_deg") = 40.0)
        .def_property_readonly("width", [](const Camera& c) { return c.film.width; })
        .def_property_readonly("height", [](const Camera& c) { return c.film.height; });

    py::class_<Scene, std::shared_ptr<Scene>>(m, "Scene")
        .def_property_readonly("name", [](const Scene& s) { return s.name; })
        .def_property_readonly("param_names", [](const Scene& s) { return s.param_names; })
        .def_property_readonly("theta0",
                               [](const Scene& s) {
                                   py::array_t<double> out(std::vector<py::ssize_t>{py::ssize_t(s.theta0.size())});
                                   std::memcpy(out.mutable_data(), s.theta0.data(),
                                               sizeof(double) * s.theta0.size());
                                   return out;
                               })
        .def_property(
            "camera", [](const Scene& s) { return s.camera; },
            [](Scene& s, const Camera& c) { s.camera = c; })
        .def("param_index", [](const Scene& s, const std::string& n) { return resolve_param(s, n); })
        .def("to_json", [](const Scene& s) { return scene_to_json(s); });

    m.def("load_scene",
          [](const std::string& path) { return std::make_shared<Scene>(load_scene(path)); },
          py::arg("path"));
    m.def("parse_scene",
          [](const std::string& text) { return std::make_shared<Scene>(parse_scene(text)); },
          py::arg("text"));

    m.def(
        "render",
        [](const Scene& scene, py::object theta, int spp, std::uint64_t seed, int threads,
           int level) {
            auto th = theta_or_default(scene, theta);
            Camera cam = scene.camera.at_level(level);
            Image img;
            {
                py::gil_scoped_release release;
                img = render_image(scene, th, cam, spp, seed, threads);
            }
            return image_to_numpy(img);
        },
        py::arg("scene"), py::arg("theta") = py::none(), py::arg("spp") = 16,
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("level") = 0);

    m.def(
        "gradient_image",
        [](const Scene& scene, const std::string& param, py::object theta,
           const std::string& mode, int interior_spp, int boundary_spp, std::uint64_t seed,
           int threads, double gamma, double lambda_d, int k) {
            auto th = theta_or_default(scene, theta);
            ParamSelector sel;
            sel.slot = resolve_or_throw(scene, param);
            GradConfig cfg;
            cfg.mode = mode == "naive" ? GradMode::Naive : GradMode::Warped;
            cfg.interior_spp = interior_spp;
            cfg.boundary_spp = boundary_spp;
            cfg.warp = warp_from_kwargs(gamma, lambda_d, k);
            cfg.seed = seed;
            GradientImage gi;
            {
                py::gil_scoped_release release;
                gi = gradient_image(scene, th, scene.camera, sel, cfg, threads);
            }
            return imagef_to_numpy(gi.value);
        },
        py::arg("scene"), py::arg("param"), py::arg("theta") = py::none(),
        py::arg("mode") = "warped", py::arg("interior_spp") = 16, py::arg("boundary_spp") = 4,
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("gamma") = -1.0,
        py::arg("lambda_d") = -1.0, py::arg("k") = 0);

    m.def(
        "fd_gradient_image",
        [](const Scene& scene, const std::string& param, py::object theta, double h, int spp,
           std::uint64_t seed, int threads) {
            auto th = theta_or_default(scene, theta);
            int slot = resolve_or_throw(scene, param);
            ImageF img;
            {
                py::gil_scoped_release release;
                img = fd_gradient_image(scene, th, scene.camera, slot, h, spp, seed, threads);
            }
            return imagef_to_numpy(img);
        },
        py::arg("scene"), py::arg("param"), py::arg("theta") = py::none(),
        py::arg("h") = 1e-3, py::arg("spp") = 256, py::arg("seed") = 0, py::arg("threads") = 1);

    m.def(
        "eval_sdf",
        [](const Scene& scene, double x, double y, double z, py::object theta) {
            auto th = theta_or_default(scene, theta);
            return sdf_eval(*scene.root, Vec3d{x, y, z}, th);
        },
        py::arg("scene"), py::arg("x"), py::arg("y"), py::arg("z"), py::arg("theta") = py::none());

    m.def(
        "sdf_gradient",
        [](const Scene& scene, double x, double y, double z, py::object theta) {
            auto th = theta_or_default(scene, theta);
            Vec3d g = sdf_spatial_gradient(*scene.root, Vec3d{x, y, z}, th);
            return py::make_tuple(g.x, g.y, g.z);
        },
        py::arg("scene"), py::arg("x"), py::arg("y"), py::arg("z"), py::arg("theta") = py::none());

    m.def(
        "trace",
        [](const Scene& scene, double ux, double uy, py::object theta) {
            auto th = theta_or_default(scene, theta);
            TraceOptions opts = default_trace_options(scene);
            Ray ray = scene.camera.generate_ray(Vec2d{ux, uy});
            Trajectory traj = sphere_trace(*scene.root, th, ray, opts);
            py::dict out;
            std::vector<py::ssize_t> shape{py::ssize_t(traj.points.size())};
            py::array_t<double> t(shape), f(shape);
            for (size_t i = 0; i < traj.points.size(); ++i) {
                t.mutable_at(py::ssize_t(i)) = traj.points[i].t;
                f.mutable_at(py::ssize_t(i)) = traj.points[i].f;
            }
            out["t"] = t;
            out["f"] = f;
            out["hit"] = traj.hit;
            out["t_star"] = traj.hit ? traj.t_star : -1.0;
            return out;
        },
        py::arg("scene"), py::arg("ux"), py::arg("uy"), py::arg("theta") = py::none());

    m.def(
        "warp_v",
        [](const Scene& scene, double ux, double uy, const std::string& param, py::object theta,
           double gamma, double lambda_d, int k) {
            auto th = theta_or_default(scene, theta);
            int slot = resolve_or_throw(scene, param);
            TraceOptions opts = default_trace_options(scene);
            Vec2d v = warp_V_param(*scene.root, th, scene.camera, Vec2d{ux, uy}, slot,
                                   warp_from_kwargs(gamma, lambda_d, k), opts,
                                   scene.bounding_radius);
            return py::make_tuple(v.x, v.y);
        },
        py::arg("scene"), py::arg("ux"), py::arg("uy"), py::arg("param"),
        py::arg("theta") = py::none(), py::arg("gamma") = -1.0, py::arg("lambda_d") = -1.0,
        py::arg("k") = 0);

    m.def(
        "kronecker_probe",
        [](const Scene& scene, std::vector<double> us_x, double gamma, double lambda_d, int k,
           int max_steps) {
            WarpConfig wc = warp_from_kwargs(gamma, lambda_d, k);
            wc.allow_diagnostic_gamma = true;
            TraceOptions opts = default_trace_options(scene);
            if (max_steps > 0) opts.max_steps = max_steps;
            std::vector<Vec2d> us;
            for (double x : us_x) us.push_back({x, 0.0});
            return kronecker_probe(*scene.root, scene.theta0, scene.camera, us, wc, opts,
                                   scene.bounding_radius);
        },
        py::arg("scene"), py::arg("us_x"), py::arg("gamma") = -1.0, py::arg("lambda_d") = -1.0,
        py::arg("k") = 0, py::arg("max_steps") = 0);

    m.def("lemma_bound", &lemma_bound_eval, py::arg("delta"), py::arg("r_l"),
          py::arg("lambda_d"), py::arg("gamma"));

    m.def(
        "geometric_init",
        [](Scene& scene, std::uint64_t seed, double r0) {
            std::function<void(const SdfNode&)> walk = [&](const SdfNode& n) {
                if (n.kind == SdfKind::Mlp) geometric_init(*n.mlp, seed, r0, scene.theta0);
                for (const auto& c : n.children) walk(*c);
            };
            walk(*scene.root);
        },
        py::arg("scene"), py::arg("seed") = 0, py::arg("r0") = 0.5);

    m.def(
        "fit",
        [](const Scene& scene, std::vector<std::pair<Camera, py::array_t<float>>> views,
           int iterations, int pixels_per_iter, double lr, const std::string& mode,
           std::uint64_t seed, int threads, double eikonal_weight, int pyramid_levels, int k) {
            Dataset data;
            for (auto& [cam, arr] : views) {
                View v;
                v.camera = cam;
                v.target = numpy_to_image(arr);
                data.views.push_back(std::move(v));
            }
            OptimConfig oc;
            oc.iterations = iterations;
            oc.pixels_per_iter = pixels_per_iter;
            oc.adam.lr = lr;
            oc.mode = mode == "naive" ? GradMode::Naive : GradMode::Warped;
            oc.seed = seed;
            oc.threads = threads;
            oc.eikonal_weight = eikonal_weight;
            oc.pyramid_levels = pyramid_levels;
            if (k == -1)
                oc.warp.k_all = true;
            else if (k > 0)
                oc.warp.k = k;
            data.build_pyramid(oc.pyramid_levels);
            FitResult res;
            {
                py::gil_scoped_release release;
                res = fit(scene, data, oc);
            }
            py::dict out;
            py::array_t<double> tb(std::vector<py::ssize_t>{py::ssize_t(res.theta_best.size())});
            std::memcpy(tb.mutable_data(), res.theta_best.data(),
                        sizeof(double) * res.theta_best.size());
            out["theta_best"] = tb;
            out["best_loss"] = res.best_loss;
            out["best_iteration"] = res.best_iteration;
            out["diverged"] = res.diverged;
            py::list hist;
            for (const auto& r : res.history)
                hist.append(py::make_tuple(r.iteration, r.level, r.loss, r.grad_norm));
            out["history"] = hist;
            return out;
        },
        py::arg("scene"), py::arg("views"), py::arg("iterations") = 200,
        py::arg("pixels_per_iter") = 128, py::arg("lr") = 5e-2, py::arg("mode") = "warped",
        py::arg("seed") = 0, py::arg("threads") = 1, py::arg("eikonal_weight") = 0.0,
        py::arg("pyramid_levels") = 3, py::arg("k") = 0);
}
