#include <doctest.h>

#include <cmath>
#include <map>

#include "cone_lab/analysis.hpp"
#include "cone_lab/measures.hpp"

using namespace cone_lab;

namespace {

// mu_sigma of the half-disk of radius r on the boundary, weight y^p with p = sigma - 2 (a = 1):
// r^{p+2} / (p+2) * int_0^pi sin^p = r^{p+2} / (p+2) * B((p+1)/2, 1/2)
double half_disk_mass(double r, double sigma) {
    double p = sigma - 2.0;
    double beta = std::tgamma((p + 1) / 2) * std::tgamma(0.5) / std::tgamma(p / 2 + 1);
    return std::pow(r, p + 2) / (p + 2) * beta;
}

Point boundary0() { return Point(0.0, INFINITY); }

}  // namespace

TEST_CASE("boundary balls have exact power masses") {
    ConeModel h = make_halfplane(1.0);
    for (double sigma : {2.0, 2.5, 1.75}) {
        for (double r : {0.5, 1.0}) {
            MeasureEstimate m = mu_sigma_ball(h, boundary0(), r, sigma);
            CHECK(m.value == doctest::Approx(half_disk_mass(r, sigma)).epsilon(1e-7));
        }
    }
    double m1 = mu_sigma_ball(h, boundary0(), 0.3, 2.0).value, m2 = mu_sigma_ball(h, boundary0(), 0.6, 2.0).value;
    CHECK(m2 / m1 == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("doubling") {
    ConeModel h = make_halfplane(1.0);
    DoublingReport d = doubling_check(h, 2.0, 30, {0.25, 0.5, 1.0}, 1);
    CHECK(d.worst_boundary == doctest::Approx(4.0).epsilon(1e-6));
    // far from the boundary the weight is nearly constant: Euclidean doubling 2^2
    CHECK(d.worst_subwhitney == doctest::Approx(4.0).epsilon(0.1));
    CHECK(std::isfinite(d.worst_ratio));
    CHECK(d.boundary > 0);
    CHECK(d.subwhitney > 0);
    CHECK(d.intermediate > 0);
    double prev_ratio = 0.0, prev_K = 0.0;
    for (double v : {1.0, 0.5, 0.25}) {
        DoublingReport r = doubling_check(h, 1.0 + v, 30, {0.25, 0.5, 1.0}, 1);
        CHECK(std::isfinite(r.worst_ratio));
        // the doubling constant and the cone constant grow together as sigma -> h
        CHECK(r.worst_ratio >= prev_ratio);
        CHECK(r.cone_upper_K >= prev_K);
        prev_ratio = r.worst_ratio;
        prev_K = r.cone_upper_K;
    }
}

TEST_CASE("ambient unit ball volume") {
    ConeModel h = make_halfplane(1.0);
    // chart quadrature: area of {d((0,0), (u,t)) <= 1} with density e^t
    const int n = 1200;
    double area = 0.0, du = 6.0 / n, dt = 2.4 / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double u = -3.0 + (i + 0.5) * du, t = -1.2 + (j + 0.5) * dt;
            double y = std::exp(-t);
            double d = std::acosh(1.0 + (u * u + (1 - y) * (1 - y)) / (2 * y));
            if (d <= 1.0) area += std::exp(t) * du * dt;
        }
    CHECK(ambient_unit_ball_volume(h) == doctest::Approx(area).epsilon(5e-3));
}

TEST_CASE("Poincare inequality") {
    ConeModel h = make_halfplane(1.0);
    std::vector<TestFunction> constant = {{"constant", [](double, double) { return 1.0; }, [](double, double) { return 1.0; }, false}};
    PoincareReport c = poincare_check(h, 2.0, constant, 6, 1);
    CHECK(c.worst_quotient == doctest::Approx(0.0).epsilon(1e-9));

    PoincareReport p = poincare_check(h, 2.0, standard_test_functions(h), 12, 1);
    CHECK(std::isfinite(p.worst_quotient));
    CHECK(p.worst_quotient <= 1.0);
    CHECK(p.evaluated > 0);
    PoincareReport q = poincare_check(h, 1.5, standard_test_functions(h), 12, 1);
    CHECK(q.worst_quotient <= 2.0 * p.worst_quotient);
    CHECK(p.worst_quotient <= 2.0 * q.worst_quotient);
}

TEST_CASE("property: Poincare quotients on subWhitney balls are scale-free") {
    ConeModel h = make_halfplane(1.0);
    PoincareReport p = poincare_check(h, 2.0, standard_test_functions(h), 24, 3);
    // subWhitney balls sit at y_c / r in [4, 8], so radius enters only through that ratio
    std::map<std::string, std::map<double, std::pair<double, double>>> range;  // function -> r -> (min, max)
    for (const auto& b : p.balls) {
        if (b.cls != BallClass::SubWhitney || (b.function != "u" && b.function != "t")) continue;
        auto& e = range[b.function].try_emplace(b.r, INFINITY, 0.0).first->second;
        e.first = std::min(e.first, b.quotient);
        e.second = std::max(e.second, b.quotient);
    }
    int compared = 0;
    for (const auto& [fn, by_r] : range)
        for (const auto& [r, e] : by_r) {
            auto half = by_r.find(0.5 * r);
            if (half == by_r.end()) continue;
            ++compared;
            REQUIRE(e.second <= 2.0 * half->second.first);
            REQUIRE(half->second.second <= 2.0 * e.first);
        }
    CHECK(compared > 0);
}

TEST_CASE("critical exponent: boundary balls have infinite mass") {
    ConeModel h = make_halfplane(1.0);
    GrowthTable g = critical_failure_demo(h, Eigen::VectorXd::Zero(1), 1.0, 1.0);
    CHECK(g.increasing);
    CHECK(g.rows.back().mass_over_T == doctest::Approx(g.rows[g.rows.size() - 2].mass_over_T).epsilon(0.1));
    CHECK(g.last_increment_slope == doctest::Approx(2.0).epsilon(0.05));
    GrowthTable c = critical_failure_demo(h, Eigen::VectorXd::Zero(1), 1.0, 1.25);
    double full = mu_sigma_ball(h, boundary0(), 1.0, 1.25).value;
    for (const auto& r : c.rows) CHECK(r.mass <= full * (1 + 1e-9));
    CHECK(c.rows.back().mass >= 0.5 * full);
    CHECK(to_csv(g).rfind("sigma,T,mass,mass_over_T", 0) == 0);
}
