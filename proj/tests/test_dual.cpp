#include <doctest.h>

#include "warpsdf/dual.hpp"
#include "warpsdf/rng.hpp"
#include "warpsdf/vec.hpp"

using namespace warpsdf;

TEST_CASE("product rule on screen tangents") {
    D2 u1 = D2::lift(0.3, 0);
    D2 u2 = D2::lift(0.7, 1);
    D2 p = u1 * u2;
    CHECK(p.v == doctest::Approx(0.21));
    CHECK(p.d[0] == doctest::Approx(0.7));
    CHECK(p.d[1] == doctest::Approx(0.3));
}

TEST_CASE("norm of (u1, u2, 1) at the origin has zero tangents") {
    Vec3<D2> v{D2::lift(0.0, 0), D2::lift(0.0, 1), D2(1.0)};
    D2 n = length(v);
    CHECK(n.v == doctest::Approx(1.0));
    CHECK(n.d[0] == doctest::Approx(0.0));
    CHECK(n.d[1] == doctest::Approx(0.0));
}

TEST_CASE("lifting a constant gives zero tangents") {
    D2 c(3.5);
    CHECK(c.v == 3.5);
    CHECK(c.d[0] == 0.0);
    CHECK(c.d[1] == 0.0);
}

namespace {

// a smooth-ish expression exercising every supported primitive
template <class S>
S corpus_expr(const S& x, const S& y) {
    S a = x * y + 2.0 * x - y / (x + 3.0);
    S b = sqrt(x * x + y * y + 0.5);
    S c = exp(x * 0.3) + log(b + 1.0) + pow(b, 1.7);
    S d = sin(x) * cos(y) + abs(y - 0.123);
    S e = branch_min(a, c) + branch_max(b, d) + softplus(x - y, 25.0);
    return e + log1p(b);
}

} // namespace

TEST_CASE("chain rule matches central differences on a random corpus") {
    Rng rng = Rng::keyed({42});
    const double h = 1e-5;
    for (int trial = 0; trial < 200; ++trial) {
        double x = rng.uniform(-2.0, 2.0), y = rng.uniform(-2.0, 2.0);
        D2 r = corpus_expr(D2::lift(x, 0), D2::lift(y, 1));
        double fx = (corpus_expr(x + h, y) - corpus_expr(x - h, y)) / (2 * h);
        double fy = (corpus_expr(x, y + h) - corpus_expr(x, y - h)) / (2 * h);
        // skip trials landing on a branch boundary
        if (std::abs(corpus_expr(x + h, y) - corpus_expr(x - h, y)) > 1.0) continue;
        CHECK(r.d[0] == doctest::Approx(fx).epsilon(1e-4).scale(std::max(1.0, std::abs(fx))));
        CHECK(r.d[1] == doctest::Approx(fy).epsilon(1e-4).scale(std::max(1.0, std::abs(fy))));
    }
}

TEST_CASE("nested duals carry second derivatives") {
    // f(x) = x^3: first derivative 3x^2, second 6x via Dual<D1,1>
    using DD = Dual<D1, 1>;
    double x0 = 1.7;
    DD x;
    x.v = D1(x0);
    x.v.d[0] = 1.0; // inner tangent
    x.d[0] = D1(1.0);  // outer tangent
    DD f = x * x * x;
    CHECK(f.v.v == doctest::Approx(x0 * x0 * x0));
    CHECK(f.v.d[0] == doctest::Approx(3 * x0 * x0));
    CHECK(f.d[0].v == doctest::Approx(3 * x0 * x0));
    CHECK(f.d[0].d[0] == doctest::Approx(6 * x0));
}

TEST_CASE("branch ties are counted and resolve to the first argument") {
    diag::branch_ties = 0;
    D1 a(1.0), b(1.0);
    a.d[0] = 2.0;
    b.d[0] = 5.0;
    D1 m = branch_min(a, b);
    CHECK(m.d[0] == 2.0);
    CHECK(diag::branch_ties == 1);
}

TEST_CASE("rng streams are deterministic and decorrelated") {
    Rng a = Rng::keyed({1, 2, 3});
    Rng b = Rng::keyed({1, 2, 3});
    Rng c = Rng::keyed({1, 2, 4});
    for (int i = 0; i < 8; ++i) {
        double av = a.next_double();
        CHECK(av == b.next_double());
        CHECK(av != c.next_double());
        CHECK(av >= 0.0);
        CHECK(av < 1.0);
    }
}
