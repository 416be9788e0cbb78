#include <doctest.h>

#include <cmath>
#include <random>

#include "cone_lab/gromov.hpp"

using namespace cone_lab;

TEST_CASE("Gromov products on simple configurations") {
    ConeModel h = make_halfplane(1.0);
    Point x(0.0, 3.0);
    CHECK(gromov_product_b(h, x, x) == doctest::Approx(3.0));
    CHECK(gromov_product_b(h, Point(0.0, 2.0), Point(0.0, 4.0)) == doctest::Approx(2.0));
    CHECK(gromov_product_b(h, Point(0.0, 0.0), Point(4.0, 0.0)) == doctest::Approx(-0.5 * std::acosh(9.0)).epsilon(1e-10));
}

TEST_CASE("flowline triples have zero defect") {
    for (const ConeModel& m : {make_halfplane(1.0), make_warped(0.1, 1.0, 1.0)}) {
        Point p(0.3, -1.0), q(0.3, 0.5), r(0.3, 2.0);
        double d = triple_defect(gromov_product_b(m, p, q), gromov_product_b(m, q, r), gromov_product_b(m, p, r));
        CHECK(d == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK(std::isnan(triple_defect(1.0, NAN, 2.0)));
}

TEST_CASE("delta estimate is stable under refinement") {
    ConeModel h = make_halfplane(1.0);
    SampleBox box{20.0, -5.0, 5.0};
    DeltaReport a = delta_estimate(h, box, 2500, 1), b = delta_estimate(h, box, 10000, 1);
    CHECK(std::isfinite(a.delta_b));
    CHECK(b.delta_b >= a.delta_b);
    CHECK(b.delta_b <= 1.1 * a.delta_b);
    CHECK(b.cross_within_2delta);
    CHECK(b.failures == 0);
    // refinement history is a prefix sequence: nondecreasing
    for (std::size_t k = 1; k < b.refinement_history.size(); ++k)
        CHECK(b.refinement_history[k].second >= b.refinement_history[k - 1].second);
}

TEST_CASE("delta scales like 1/a") {
    SampleBox box{20.0, -5.0, 5.0};
    double d1 = delta_estimate(make_halfplane(1.0), box, 4000, 2).delta_b;
    // halfplane(2) is the half-plane with distances halved; sample the matching box
    SampleBox box2{20.0, -2.5, 2.5};
    double d2 = delta_estimate(make_halfplane(2.0), box2, 4000, 2).delta_b;
    CHECK(d2 / d1 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("diagonal delta is comparable with the shared-a half-plane") {
    SampleBox box{6.0, -3.0, 3.0};
    double dh = delta_estimate(make_halfplane(1.0), box, 400, 4).delta_b;
    double dd = delta_estimate(make_diagonal({1.0, 2.0}), box, 100, 4).delta_b;
    CHECK(dd < 3.0 * dh);
    CHECK(dd > dh / 3.0);
}

TEST_CASE("minimum height along a geodesic") {
    ConeModel h = make_halfplane(1.0);
    CHECK(min_height_check(h, Point(0.0, 0.0), Point(0.0, 3.0)).discrepancy == doctest::Approx(0.0).epsilon(1e-9));
    MinHeightReport r = min_height_check(h, Point(-4.0, 0.0), Point(4.0, 0.0));
    CHECK(r.b_min == doctest::Approx(-0.5 * std::log(17.0)).epsilon(1e-3));
    CHECK(r.discrepancy <= 0.7);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst[2] = {0.0, 0.0};
    for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k < 500; ++k) {
            double s = pass == 0 ? 1.0 : 2.0;
            Point x(10 * s * U(rng), 3 * s * U(rng)), y(10 * s * U(rng), 3 * s * U(rng));
            if (std::abs(x.u(0) - y.u(0)) < 1e-6) continue;
            worst[pass] = std::max(worst[pass], min_height_check(h, x, y).discrepancy);
        }
    CHECK(worst[0] < 1.0);
    CHECK(std::abs(worst[1] - worst[0]) <= 0.1);
}

TEST_CASE("property: product bounded by heights") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ConeModel h = make_halfplane(1.0);
    for (int k = 0; k < 1000; ++k) {
        Point x(5 * U(rng), 3 * U(rng)), y(5 * U(rng), 3 * U(rng));
        REQUIRE(gromov_product_b(h, x, y) <= std::min(x.t, y.t) + 1e-12);
    }
}

TEST_CASE("property: products decrease under descent") {
    // descending vertical segments x_i -> y_i = f^{-s} x_i
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ConeModel h = make_halfplane(1.0);
    for (int k = 0; k < 500; ++k) {
        Point x1(5 * U(rng), 3 * U(rng)), x2(5 * U(rng), 3 * U(rng));
        double s1 = 2 + 2 * U(rng), s2 = 2 + 2 * U(rng);
        Point y1 = flow(h, x1, -s1), y2 = flow(h, x2, -s2);
        REQUIRE(gromov_product_b(h, y1, y2) <= gromov_product_b(h, x1, x2) + 1e-9);
    }
}

TEST_CASE("visual metric") {
    ConeModel h = make_halfplane(1.0);
    Point y(0.0, 0.0), z(4.0, 0.0);
    double r0 = visual_metric_check(h, Point(0.0, 0.0), y, z);
    CHECK(r0 >= 0.25);
    CHECK(r0 <= 4.0);
    CHECK(visual_metric_check(h, Point(0.0, 1.5), y, z) == doctest::Approx(r0).epsilon(1e-6));
    auto rays = visual_metric_rays(h, Point(0.0, 0.0), Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 4.0),
                                   {5.0, 10.0, 15.0});
    CHECK(rays[2] == doctest::Approx(rays[1]).epsilon(0.05));
}
