#include <doctest.h>

#include <cmath>
#include <random>

#include "cone_lab/geometry.hpp"

using namespace cone_lab;

namespace {

// Half-plane oracle: y = e^{-t}, points (u, y); geodesics are semicircles centred on y = 0.
double hp_dist(const Point& p, const Point& q) {
    double y1 = std::exp(-p.t), y2 = std::exp(-q.t), du = p.u(0) - q.u(0);
    return std::acosh(1.0 + (du * du + (y1 - y2) * (y1 - y2)) / (2.0 * y1 * y2));
}

Point rnd(std::mt19937_64& rng, double uh, double th) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    return Point(uh * U(rng), th * U(rng));
}

}  // namespace

TEST_CASE("half-plane geodesics") {
    ConeModel h = make_halfplane(1.0);
    GeodesicPath v = geodesic_connect(h, Point(0.0, 0.0), Point(0.0, 5.0));
    CHECK(v.total_length == doctest::Approx(5.0));

    GeodesicOptions opt;
    opt.n_samples = 2049;
    GeodesicPath g = geodesic_connect(h, Point(0.0, 0.0), Point(4.0, 0.0), opt);
    CHECK(g.total_length == doctest::Approx(std::acosh(9.0)).epsilon(1e-12));
    // semicircle centred at u = 2 with radius sqrt(5): apex y = sqrt 5
    CHECK(g.b_min() == doctest::Approx(-0.5 * std::log(5.0)).epsilon(1e-6));
}

TEST_CASE("warped geodesic against the mesh") {
    ConeModel w = make_warped(0.1, 1.0, 1.0);
    Point x(0.0, 0.0), y(2.0, 0.5);
    GeodesicPath g = geodesic_connect(w, x, y);
    CHECK(g.solver_residual <= 1e-6);
    MeshOptions mo;
    mo.n = 256;
    MeshResult mesh = mesh_distance(w, x, y, mo);
    // the mesh is a path family, so it bounds the geodesic length from above
    CHECK(g.total_length <= mesh.length + 1e-9);
    CHECK(mesh.length - g.total_length <= 5e-3);
}

TEST_CASE("distance vs leaf distance") {
    ConeModel h = make_halfplane(1.0);
    double d = distance(h, Point(0.0, 0.0), Point(4.0, 0.0));
    CHECK(d == doctest::Approx(2.88727095).epsilon(1e-8));
    double du = leaf_distance(h, Point(0.0, 0.0), Point(4.0, 0.0));
    CHECK(du == 4.0);
    CHECK(d <= du);
    CHECK(du <= std::exp(d) * d);
    CHECK(leaf_distance(h, Point(0.0, 0.0), Point(0.7, 0.0)) == doctest::Approx(0.7));
    ConeModel dg = make_diagonal({1.0, 2.0});
    CHECK(leaf_distance(dg, Point(0.0, 0.0, 0.0), Point(3.0, 0.0, 0.0)) == doctest::Approx(3.0));
}

TEST_CASE("projection to a leaf") {
    ConeModel h = make_halfplane(1.0);
    Point x(0.0, 0.0), y(3.0, 2.0);
    Point p = project(h, x, y);
    CHECK(p.u(0) == 3.0);
    CHECK(p.t == 0.0);
    Point pp = project(h, x, p);
    CHECK(same_point(p, pp));
}

TEST_CASE("height profiles") {
    ConeModel h = make_halfplane(1.0);
    HeightProfile v = height_profile(geodesic_connect(h, Point(0.0, 0.0), Point(0.0, 3.0)), 1.0);
    for (const auto& r : v.rows) {
        CHECK(r.b1 == doctest::Approx(1.0));
        CHECK(r.b2 == doctest::Approx(0.0).epsilon(1e-6));
    }
    CHECK(v.violations_quadratic == 0);

    GeodesicPath semi = geodesic_connect(h, Point(-4.0, 0.0), Point(4.0, 0.0));
    HeightProfile p = height_profile(semi, 1.0);
    // b(s) = b_min + log cosh(s - s_apex), so b'' = 1 - b'^2 exactly
    double smid = 0.5 * semi.total_length;
    for (const auto& r : p.rows) {
        double tau = r.s - smid;
        CHECK(r.b1 == doctest::Approx(std::tanh(tau)).epsilon(1e-4));
        CHECK(std::abs(r.margin_quadratic) <= 1e-3);
    }
    CHECK(p.violations_quadratic == 0);
    CHECK(p.violations_sqrt > 0);

    ConeModel w = make_warped(0.1, 1.0, 1.0);
    HeightProfile q = height_profile(geodesic_connect(w, Point(-1.0, 0.0), Point(2.0, 1.0)), w.a, 1e-3);
    CHECK(q.violations_quadratic == 0);
}

TEST_CASE("Busemann function along a vertical ray") {
    ConeModel h = make_halfplane(1.0);
    CHECK(busemann_check(h, Point(0.0, 0.0), Point(0.0, 1.7), 20.0) == doctest::Approx(0.0).epsilon(1e-9));
    double d10 = busemann_check(h, Point(0.0, 0.0), Point(4.0, 0.0), 10.0);
    double d20 = busemann_check(h, Point(0.0, 0.0), Point(4.0, 0.0), 20.0);
    CHECK(std::isfinite(d10));
    CHECK(std::abs(d10 - d20) <= 0.01 * std::max(1.0, std::abs(d20)));
}

TEST_CASE("property: metric axioms") {
    std::mt19937_64 rng(9);
    ConeModel h = make_halfplane(1.0);
    for (int k = 0; k < 1000; ++k) {
        Point x = rnd(rng, 5, 3), y = rnd(rng, 5, 3), z = rnd(rng, 5, 3);
        double dxy = distance(h, x, y);
        REQUIRE(dxy == doctest::Approx(hp_dist(x, y)).epsilon(1e-10));
        REQUIRE(dxy == doctest::Approx(distance(h, y, x)).epsilon(1e-12));
        REQUIRE(dxy <= distance(h, x, z) + distance(h, z, y) + 1e-6);
    }
    ConeModel w = make_warped(0.1, 1.0, 1.0);
    for (int k = 0; k < 40; ++k) {
        Point x = rnd(rng, 2, 1), y = rnd(rng, 2, 1), z = rnd(rng, 2, 1);
        double dxy = distance(w, x, y);
        REQUIRE(std::abs(dxy - distance(w, y, x)) <= 1e-6);
        REQUIRE(dxy <= distance(w, x, z) + distance(w, z, y) + 1e-3);
    }
}

TEST_CASE("property: leaf separation grows under the flow") {
    std::mt19937_64 rng(10);
    for (const ConeModel& m : {make_halfplane(1.0), make_warped(0.1, 1.0, 1.0)}) {
        for (int k = 0; k < 50; ++k) {
            Point x = rnd(rng, 3, 2);
            Point y(x.u(0) + 0.5 + rnd(rng, 1, 1).u(0), x.t);
            double d0 = leaf_distance(m, x, y), prev = d0;
            for (double t = 0.25; t <= 3.0; t += 0.25) {
                double d = leaf_distance(m, flow(m, x, t), flow(m, y, t));
                REQUIRE(d >= prev * (1 - 1e-12));
                REQUIRE(d >= std::exp(m.a * t) * d0 * (1 - 1e-9));
                REQUIRE(d <= std::exp(m.A * t) * d0 * (1 + 1e-9));
                prev = d;
            }
        }
    }
}

TEST_CASE("property: unit speed, 1-Lipschitz height, single minimum") {
    std::mt19937_64 rng(12);
    for (const ConeModel& m : {make_halfplane(1.0), make_warped(0.1, 1.0, 1.0), make_diagonal({1.0, 2.0})}) {
        for (int k = 0; k < 15; ++k) {
            Eigen::VectorXd u1 = Eigen::VectorXd::Random(m.dim_u) * 2.0, u2 = Eigen::VectorXd::Random(m.dim_u) * 2.0;
            Point x(u1, rnd(rng, 1, 1).t), y(u2, rnd(rng, 1, 1).t);
            GeodesicPath g = geodesic_connect(m, x, y);
            for (std::size_t i = 0; i < g.samples.size(); ++i) {
                REQUIRE(std::abs(g.samples[i].b_prime) <= 1.0 + 1e-9);
                if (i > 0) REQUIRE(g.samples[i].b_prime >= g.samples[i - 1].b_prime - 1e-7);
            }
            GeodesicPath two{};
            two.samples = {g.samples[0], g.samples[1]};
            double ds = g.samples[1].s - g.samples[0].s;
            REQUIRE(path_length(m, two) == doctest::Approx(ds).epsilon(1e-4));
        }
    }
}

TEST_CASE("degenerate input") {
    ConeModel h = make_halfplane(1.0);
    CHECK(distance(h, Point(1.0, 1.0), Point(1.0, 1.0)) == 0.0);
    CHECK_THROWS_AS(geodesic_connect(h, Point(1.0, 1.0), Point(1.0, 1.0)), Error);
}
