#include <doctest.h>

#include <cmath>

#include "warpsdf/rng.hpp"
#include "warpsdf/sdf.hpp"

using namespace warpsdf;

namespace {

std::vector<double> fd_theta_gradient(const SdfNode& root, const Vec3d& x,
                                      const std::vector<double>& theta, double h = 1e-5) {
    std::vector<double> g(theta.size());
    for (size_t j = 0; j < theta.size(); ++j) {
        auto tp = theta, tm = theta;
        tp[j] += h;
        tm[j] -= h;
        g[j] = (sdf_eval(root, x, tp) - sdf_eval(root, x, tm)) / (2 * h);
    }
    return g;
}

} // namespace

TEST_CASE("analytic primitive distances") {
    std::vector<double> theta;
    auto sphere = make_sphere(0.0, 0.0, 0.0, 1.0);
    CHECK(sdf_eval(*sphere, Vec3d{0, 0, -3}, theta) == doctest::Approx(2.0));
    CHECK(sdf_eval(*sphere, Vec3d{0, 0, 0}, theta) == doctest::Approx(-1.0));

    auto torus = make_torus(0.0, 0.0, 0.0, 1.0, 0.25);
    CHECK(sdf_eval(*torus, Vec3d{1, 0, 0}, theta) == doctest::Approx(-0.25));

    auto plane = make_plane(0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    CHECK(sdf_eval(*plane, Vec3d{5, -2, 0.75}, theta) == doctest::Approx(0.75));
}

TEST_CASE("primitive exactness at random points") {
    std::vector<double> theta;
    auto sphere = make_sphere(0.25, -0.5, 1.0, 0.8);
    auto box = make_box(0.0, 0.0, 0.0, 0.5, 0.25, 0.75);
    Rng rng = Rng::keyed({7});
    for (int i = 0; i < 1000; ++i) {
        Vec3d p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        double ds = length(p - Vec3d{0.25, -0.5, 1.0}) - 0.8;
        CHECK(sdf_eval(*sphere, p, theta) == doctest::Approx(ds).epsilon(1e-14));
        // box closed form
        Vec3d q{std::abs(p.x) - 0.5, std::abs(p.y) - 0.25, std::abs(p.z) - 0.75};
        Vec3d qp{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
        double db = length(qp) + std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
        CHECK(sdf_eval(*box, p, theta) == doctest::Approx(db).epsilon(1e-14));
    }
}

TEST_CASE("sign convention inside and outside") {
    std::vector<double> theta;
    auto sphere = make_sphere(0.0, 0.0, 0.0, 1.0);
    auto torus = make_torus(0.0, 0.0, 0.0, 1.0, 0.25);
    Rng rng = Rng::keyed({8});
    for (int i = 0; i < 100; ++i) {
        // points offset along the surface normal
        double a = rng.uniform(0, 6.283185), b = rng.uniform(-1.5, 1.5);
        Vec3d n = normalize(Vec3d{std::cos(a), std::sin(a) * std::cos(b), std::sin(a) * std::sin(b)});
        CHECK(sdf_eval(*sphere, n * 1.01, theta) > 0.0);
        CHECK(sdf_eval(*sphere, n * 0.99, theta) < 0.0);
        Vec3d ring{std::cos(a), 0.0, std::sin(a)};
        CHECK(sdf_eval(*torus, ring * (1.0 + 0.26), theta) > 0.0);
        CHECK(sdf_eval(*torus, ring * (1.0 + 0.10), theta) < 0.0);
    }
}

TEST_CASE("spatial gradients") {
    std::vector<double> theta;
    auto sphere = make_sphere(0.0, 0.0, 0.0, 1.0);
    Vec3d g = sdf_spatial_gradient(*sphere, Vec3d{0, 0, -2}, theta);
    CHECK(g.x == doctest::Approx(0.0));
    CHECK(g.y == doctest::Approx(0.0));
    CHECK(g.z == doctest::Approx(-1.0));

    auto plane = make_plane(0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    Vec3d gp = sdf_spatial_gradient(*plane, Vec3d{3, 1, -2}, theta);
    CHECK(gp.x == doctest::Approx(0.0));
    CHECK(gp.y == doctest::Approx(0.0));
    CHECK(gp.z == doctest::Approx(1.0));
}

TEST_CASE("smooth union gradient matches finite differences") {
    std::vector<double> theta;
    std::vector<SdfNodePtr> kids;
    kids.push_back(make_sphere(-0.5, 0.0, 0.0, 0.6));
    kids.push_back(make_sphere(0.5, 0.0, 0.0, 0.6));
    auto su = make_combine(SdfKind::SmoothUnion, std::move(kids), 0.3);
    const double h = 1e-4;
    Vec3d x{0.0, 0.21, 0.05}; // midpoint region where the blend is active
    Vec3d g = sdf_spatial_gradient(*su, x, theta);
    for (int k = 0; k < 3; ++k) {
        Vec3d xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        double fd = (sdf_eval(*su, xp, theta) - sdf_eval(*su, xm, theta)) / (2 * h);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("parameter adjoints: sphere radius and center") {
    std::vector<double> theta{1.0, 0.0, 0.0, 0.0}; // r, cx, cy, cz
    auto sphere = make_sphere(ParamRef::slotted(1), ParamRef::slotted(2), ParamRef::slotted(3),
                              ParamRef::slotted(0));
    Vec3d x{0.0, 0.0, -2.0};
    std::vector<double> grad(4, 0.0);
    accumulate_param_adjoint(*sphere, x, theta, 1.0, grad);
    CHECK(grad[0] == doctest::Approx(-1.0)); // df/dr = -1
    // df/dc = -(x-c)/|x-c| = -n
    CHECK(grad[1] == doctest::Approx(0.0));
    CHECK(grad[2] == doctest::Approx(0.0));
    CHECK(grad[3] == doctest::Approx(1.0));

    // additive composition
    accumulate_param_adjoint(*sphere, x, theta, 1.0, grad);
    CHECK(grad[0] == doctest::Approx(-2.0));
}

TEST_CASE("adjoint equals dense forward mode and directional FD") {
    // a composite scene with every differentiable node kind
    std::vector<double> theta{0.8, 0.2, -0.1, 0.3, 0.25, 0.15, 1.1};
    std::vector<SdfNodePtr> kids;
    kids.push_back(make_sphere(ParamRef::slotted(1), ParamRef::slotted(2), 0.0,
                               ParamRef::slotted(0)));
    kids.push_back(make_torus(0.3, ParamRef::slotted(3), 0.0, 0.9, ParamRef::slotted(4)));
    auto su = make_combine(SdfKind::SmoothUnion, std::move(kids), ParamRef::slotted(5));
    auto root = make_transform(std::move(su), 0.05, -0.02, 0.0, ParamRef::slotted(6),
                               Vec3d{0, 1, 0}, 0.4);

    Rng rng = Rng::keyed({99});
    for (int trial = 0; trial < 50; ++trial) {
        Vec3d x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        std::vector<double> adj(theta.size(), 0.0);
        accumulate_param_adjoint(*root, x, theta, 1.0, adj);
        auto fwd = sdf_theta_gradient_forward(*root, x, theta);
        auto fd = fd_theta_gradient(*root, x, theta);
        for (size_t j = 0; j < theta.size(); ++j) {
            CHECK(adj[j] == doctest::Approx(fwd[j]).epsilon(1e-10).scale(1.0));
            CHECK(adj[j] == doctest::Approx(fd[j]).epsilon(1e-4).scale(1.0));
        }
        // directional agreement: <grad, v> vs FD along v
        std::vector<double> v(theta.size());
        for (auto& w : v) w = rng.uniform(-1, 1);
        double dir_adj = 0.0;
        for (size_t j = 0; j < v.size(); ++j) dir_adj += adj[j] * v[j];
        const double h = 1e-5;
        auto tp = theta, tm = theta;
        for (size_t j = 0; j < v.size(); ++j) {
            tp[j] += h * v[j];
            tm[j] -= h * v[j];
        }
        double dir_fd = (sdf_eval(*root, x, tp) - sdf_eval(*root, x, tm)) / (2 * h);
        CHECK(dir_adj == doctest::Approx(dir_fd).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("zero seed produces zero gradient; adjoint is linear in the seed") {
    std::vector<double> theta{1.0};
    auto sphere = make_sphere(0.0, 0.0, 0.0, ParamRef::slotted(0));
    std::vector<double> g0(1, 0.0), g1(1, 0.0), g2(1, 0.0);
    Vec3d x{0.3, -0.2, 1.4};
    accumulate_param_adjoint(*sphere, x, theta, 0.0, g0);
    CHECK(g0[0] == 0.0);
    accumulate_param_adjoint(*sphere, x, theta, 1.0, g1);
    accumulate_param_adjoint(*sphere, x, theta, 2.5, g2);
    CHECK(g2[0] == doctest::Approx(2.5 * g1[0]));
}

TEST_CASE("mixed adjoint produces d_theta of directional spatial derivatives") {
    // d/dtheta [ a f(x) + grad f(x).g ] against finite differences
    std::vector<double> theta{0.9, 0.15};
    std::vector<SdfNodePtr> kids;
    kids.push_back(make_sphere(ParamRef::slotted(1), 0.0, 0.0, ParamRef::slotted(0)));
    kids.push_back(make_box(0.4, 0.1, 0.0, 0.3, 0.3, 0.3));
    auto root = make_combine(SdfKind::SmoothUnion, std::move(kids), 0.2);

    Vec3d x{0.2, 0.4, 1.1};
    Vec3d g{0.3, -1.1, 0.7};
    double a = 0.8;
    std::vector<double> grad(2, 0.0);
    accumulate_mixed_adjoint(*root, theta, x, a, g, 1.0, grad);

    const double h = 1e-5;
    for (int j = 0; j < 2; ++j) {
        auto tp = theta, tm = theta;
        tp[size_t(j)] += h;
        tm[size_t(j)] -= h;
        auto phi = [&](const std::vector<double>& th) {
            auto [f, dfg] = sdf_value_and_dir_deriv(*root, x, g, th);
            return a * f + dfg;
        };
        double fd = (phi(tp) - phi(tm)) / (2 * h);
        CHECK(grad[size_t(j)] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("empty node evaluates far away with zero gradient") {
    std::vector<double> theta{1.0};
    auto e = make_empty();
    CHECK(sdf_eval(*e, Vec3d{0, 0, 0}, theta) == kEmptyDistance);
    std::vector<double> grad(1, 0.0);
    accumulate_param_adjoint(*e, Vec3d{0, 0, 0}, theta, 1.0, grad);
    CHECK(grad[0] == 0.0);
}
