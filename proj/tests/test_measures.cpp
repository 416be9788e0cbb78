#include <doctest.h>

#include <cmath>
#include <random>

#include "cone_lab/measures.hpp"

using namespace cone_lab;

namespace {

// Riemann zeta by direct summation plus an Euler-Maclaurin tail.
double zeta(double s) {
    const int N = 2000;
    double sum = 0.0;
    for (int k = 1; k < N; ++k) sum += std::pow(k, -s);
    double n = N;
    return sum + std::pow(n, 1 - s) / (s - 1) + 0.5 * std::pow(n, -s) + s / 12.0 * std::pow(n, -s - 1);
}

// G for the half-plane with V_t = floor(2 e^t) + 1, summed level by level.
double halfplane_G(double sigma) { return (2.0 + std::pow(2.0, sigma) * (zeta(sigma) - 1.0)) / sigma; }

// Brute-force greedy 1-separated set on [-R, R] scanned left to right.
int greedy_count(double R, double sep) {
    int n = 0;
    double last = -INFINITY;
    for (double u = -R; u <= R + 1e-12; u += sep / 64.0)
        if (u - last >= sep * (1 - 1e-12)) ++n, last = u;
    return n;
}

}  // namespace

TEST_CASE("cone masses on the half-plane") {
    ConeModel h = make_halfplane(1.0);
    ConeRegion full{Point(0.0, 0.0), 1.0, 0.0, INFINITY};
    CHECK(mu_sigma_region(h, full, 2.0).value == doctest::Approx(2.0).epsilon(1e-10));
    CHECK_THROWS_AS(mu_sigma_region(h, full, 1.0), Error);
    ConeRegion trunc{Point(0.0, 0.0), 1.0, 0.0, 1.0};
    CHECK(mu_sigma_region(h, trunc, 1.0).value == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("warped cone mass agrees with direct slice integration") {
    ConeModel w = make_warped(0.1, 1.0, 1.0);
    ConeRegion c{Point(0.0, 0.0), 1.0, 0.0, 3.0};
    double got = mu_sigma_region(w, c, 1.5).value;
    // midpoint rule over heights; each slice is the rho-ball interval of the apex
    LeafBall ball = rho_ball(w, Point(0.0, 0.0), 1.0);
    const int nt = 600, nu = 400;
    double sum = 0.0;
    for (int i = 0; i < nt; ++i) {
        double t = 3.0 * (i + 0.5) / nt;
        for (int j = 0; j < nu; ++j) {
            double u = ball.lo(0) + (ball.hi(0) - ball.lo(0)) * (j + 0.5) / nu;
            sum += std::exp(-1.5 * t) * w.phi(0, Eigen::VectorXd::Constant(1, u), t);
        }
    }
    sum *= (3.0 / nt) * (ball.hi(0) - ball.lo(0)) / nu;
    CHECK(got == doctest::Approx(sum).epsilon(1e-4));
}

TEST_CASE("separated counts") {
    ConeModel h = make_halfplane(1.0);
    Point x(0.0, 0.0);
    NetResult n = separated_count(h, x, 0.0, 0.0);
    CHECK(n.count == 3);
    NetAudit au = audit_net(h, n);
    CHECK(au.separated);
    CHECK(au.maximal);
    // the closed ball of radius e^{-al} holds its centre and both endpoints when s = l
    CHECK(separated_count(h, x, 1.0, 1.0).count == 3);
    for (double s : {0.5, 1.0, 2.0, 3.0}) CHECK(separated_count(h, x, s, 0.0).count == greedy_count(1.0, std::exp(-s)));
    for (double t : {1.0, 2.0}) {
        double a = separated_count_value(h, x, 2.5, 0.5);
        double b = separated_count_value(h, flow(h, x, -t), 2.5 + t, 0.5 + t);
        CHECK(a == b);
    }
    CHECK_THROWS_AS(separated_count(h, x, 0.0, 1.0), Error);
}

TEST_CASE("2-D separated counts") {
    ConeModel d = make_diagonal({1.0, 1.0});
    NetResult n = separated_count(d, Point(0.0, 0.0, 0.0), 2.0, 0.0);
    // lattice oracle: integer points (i, j) with i^2 + j^2 <= e^4 scaled back
    double R = std::exp(2.0);
    int lattice = 0;
    for (int i = -10; i <= 10; ++i)
        for (int j = -10; j <= 10; ++j)
            if (i * i + j * j <= R * R * (1 + 1e-12)) ++lattice;
    CHECK(n.count >= lattice);
    CHECK(n.count <= 4 * lattice);
    NetAudit au = audit_net(d, n);
    CHECK(au.separated);
    CHECK(au.maximal);
}

TEST_CASE("entropy estimates") {
    CHECK(entropy_estimate(make_halfplane(1.0), 8).h_est == doctest::Approx(1.0).epsilon(0.05));
    CHECK(entropy_estimate(make_diagonal({1.0, 2.0}), 8).h_est == doctest::Approx(3.0).epsilon(0.1 / 3.0));
    Eigen::Matrix2i M;
    M << 2, 1, 1, 1;
    ConeModel cat = make_suspension(M).cover;
    EntropyReport e = entropy_estimate(cat, 8);
    CHECK(std::abs(e.h_est - std::log((3.0 + std::sqrt(5.0)) / 2.0)) <= 0.05);
    CHECK(e.submultiplicative);
    CHECK(e.fekete);
    CHECK(e.monotone);
}

TEST_CASE("Laplace transform of the growth function") {
    ConeModel h = make_halfplane(1.0);
    LaplaceG g = laplace_G(h, 2.0, 40.0, 0.99);
    CHECK(std::abs(g.value - halfplane_G(2.0)) <= g.quad_error + g.tail + 1e-9);
    CHECK(halfplane_G(2.0) == doctest::Approx(2.289868).epsilon(1e-6));
    for (double s : {1.5, 1.25, 1.125}) {
        LaplaceG gs = laplace_G(h, s, 40.0, 0.99);
        CHECK(std::abs(gs.value - halfplane_G(s)) <= gs.quad_error + gs.tail + 1e-9);
    }
    double prev = INFINITY;
    for (double s : {2.0, 4.0, 8.0, 16.0}) {
        double v = laplace_G(h, s, 40.0, 0.99).value;
        CHECK(v < prev);
        prev = v;
    }
    // V_0 = 3 dominates as sigma grows
    CHECK(laplace_G(h, 64.0, 40.0, 0.99).value * 64.0 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("cone mass against e^{-sigma b} G") {
    ConeModel h = make_halfplane(1.0);
    CritReport c0 = crit_ratio(h, Point(0.0, 0.0), 2.0, 0.99);
    CHECK(c0.numerator == doctest::Approx(2.0));
    CHECK(c0.ratio == doctest::Approx(2.0 / halfplane_G(2.0)).epsilon(2e-3));
    CritReport c1 = crit_ratio(h, Point(0.0, 1.0), 2.0, 0.99);
    CHECK(c1.ratio == doctest::Approx(c0.ratio).epsilon(1e-3));
    CHECK(std::isfinite(c0.shifted_pos));
    CHECK(std::isfinite(c0.shifted_neg));
}

TEST_CASE("renormalized cone measures") {
    ConeModel h = make_halfplane(1.0);
    RenormalizedMeasure m = ps_renormalize(h, Point(0.0, 0.0), 2.0, 0.0, 8);
    double sum = 0.0;
    for (const auto& c : m.partition) {
        CHECK(c.mass == doctest::Approx(m.total_mass * (c.hi(0) - c.lo(0)) / 2.0).epsilon(1e-8));
        sum += c.mass;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    RenormalizedMeasure l1 = ps_renormalize(h, Point(0.0, 0.0), 1.5, 1.0, 4);
    CHECK(l1.total_mass == doctest::Approx(std::exp(1.5)).epsilon(1e-10));
    RenormalizedMeasure near = ps_renormalize(h, Point(0.0, 0.0), 1.0625, 0.0, 0);
    CHECK(near.cone_mass(Point(0.25, 0.0), 0.25) == doctest::Approx(0.25).epsilon(1e-6));
    // interior fraction below T is 1 - e^{-(sigma - h) T}
    for (double v : {0.25, 0.125}) {
        RenormalizedMeasure r = ps_renormalize(h, Point(0.0, 0.0), 1.0 + v, 0.0, 0, {1.0});
        CHECK(r.interior_mass_below(1.0) == doctest::Approx(1.0 - std::exp(-v)).epsilon(1e-8));
    }
    // l = 1 and l = 0 agree on common sub-cones up to the e^{sigma} renormalization
    RenormalizedMeasure a0 = ps_renormalize(h, Point(0.0, 0.0), 1.125, 0.0, 0), a1 = ps_renormalize(h, Point(0.0, 0.0), 1.125, 1.0, 0);
    double q = a1.cone_mass(Point(0.3, 0.0), 0.5) / a0.cone_mass(Point(0.3, 0.0), 0.5);
    CHECK(q >= 1.0 / 4.0);
    CHECK(q <= 4.0);
    CHECK(std::isnan(a0.cone_mass(Point(0.0, 0.0), 3.0)));
}

TEST_CASE("Ahlfors regularity") {
    ConeModel h = make_halfplane(1.0);
    AhlforsReport r = ahlfors_check(ps_renormalize(h, Point(0.0, 0.0), 1.125, 1.0, 0), {1.0, 0.5, 0.25, 0.125}, 20);
    CHECK(r.exponent == 1.0);
    double lo = INFINITY, hi = 0.0;
    for (double q : r.ratios) lo = std::min(lo, q), hi = std::max(hi, q);
    CHECK(hi / lo == doctest::Approx(1.0).epsilon(1e-8));
    ConeModel d = make_diagonal({1.0, 1.0});
    AhlforsReport r2 = ahlfors_check(ps_renormalize(d, Point(0.0, 0.0, 0.0), 2.125, 1.0, 0), {1.0, 0.5, 0.25}, 10);
    CHECK(r2.exponent == 2.0);
    lo = INFINITY, hi = 0.0;
    for (double q : r2.ratios) lo = std::min(lo, q), hi = std::max(hi, q);
    CHECK(hi / lo == doctest::Approx(1.0).epsilon(1e-6));
    // radii beyond the partition ball are excluded
    AhlforsReport big = ahlfors_check(ps_renormalize(h, Point(0.0, 0.0), 1.125, 0.0, 0), {5.0}, 4);
    CHECK(big.excluded == 4);
}

TEST_CASE("Margulis measure") {
    ConeModel h = make_halfplane(1.0);
    ChartBox box{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), 0.0, 1.0};
    MargulisReport m = margulis_checks(h, box, 1.0);
    // nu at height s is e^{s} du / 2, so m = (1/2) * int_0^1 e^s ds
    CHECK(m.mass == doctest::Approx((std::exp(1.0) - 1.0) / 2.0).epsilon(1e-10));
    CHECK(m.image_mass == doctest::Approx(std::exp(1.0) * m.mass).epsilon(1e-10));
    CHECK(m.flip_error <= 1e-6);
    CHECK(m.nu_normalization == doctest::Approx(0.5));
    CHECK(margulis_checks(h, box, 0.0).image_mass == doctest::Approx(m.mass).epsilon(1e-12));
}

TEST_CASE("holonomy invariance on the cat map suspension") {
    Eigen::Matrix2i M;
    M << 2, 1, 1, 1;
    SuspensionModel s = make_suspension(M);
    HolonomyInvarianceReport id = holonomy_invariance_check(s, 0.5, 0.5, 0.0, 0.0);
    SPoint x{Eigen::Vector2d(0.1, 0.2), 0.0};
    SPoint z = s.along_unstable(x, 0.3);
    SPoint hz = s.holonomy_s(x, x, z);
    CHECK(hz.p == z.p);
    CHECK(hz.t == z.t);
    CHECK(id.mass_V == doctest::Approx(id.mass_U).epsilon(1e-12));
    HolonomyInvarianceReport r = holonomy_invariance_check(s, 0.5, 0.5, 0.5, 0.25);
    CHECK(r.s_discrepancy <= 1e-2);
    CHECK(r.cs_within);
}

TEST_CASE("property: nets are separated and maximal") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const ConeModel& m : {make_halfplane(1.0), make_warped(0.1, 1.0, 1.0), make_diagonal({1.0, 2.0})}) {
        for (int k = 0; k < 6; ++k) {
            double l = U(rng), s = l + (m.dim_u == 1 ? 3.0 : 1.2) * U(rng);
            NetResult n = separated_count(m, Point(Eigen::VectorXd::Zero(m.dim_u), U(rng)), s, l);
            if (!n.points_complete) continue;
            NetAudit au = audit_net(m, n, 200);
            REQUIRE(au.separated);
            REQUIRE(au.maximal);
        }
    }
}

TEST_CASE("property: submultiplicativity") {
    ConeModel h = make_halfplane(1.0);
    Point x(0.0, 0.0);
    for (double s = 0.0; s <= 4.0; s += 0.5)
        for (double t = 0.0; t <= 4.0; t += 0.5)
            REQUIRE(separated_count_value(h, x, s + t) <= 2.0 * separated_count_value(h, x, s) * separated_count_value(h, x, t));
}
