#include "cone_lab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace cone_lab {

std::string to_string(BallClass c) {
    switch (c) {
        case BallClass::Boundary: return "boundary";
        case BallClass::SubWhitney: return "subwhitney";
        case BallClass::Intermediate: return "intermediate";
    }
    return "?";
}

double ambient_unit_ball_volume(const ConeModel& model) {
    if (!has_exact_uniformization(model)) fail(ErrorKind::Unsupported, "ambient_unit_ball_volume: homogeneous models only");
    double a = model.a;
    if (model.dim_u == 1) return 2.0 * M_PI * (std::cosh(a) - 1.0) / (a * a);
    if (model.dim_u == 2) return M_PI * (std::sinh(2.0 * a) - 2.0 * a) / (a * a * a);
    fail(ErrorKind::Unsupported, "ambient_unit_ball_volume: leaf dimension > 2");
}

namespace {

BallClass class_of(int k) { return static_cast<BallClass>(k % 3); }

// Height of the center in the (u, y) picture for the stratified classes.
double center_height(BallClass c, double r, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    switch (c) {
        case BallClass::Boundary: return 0.0;
        case BallClass::SubWhitney: return r * (4.0 + 4.0 * U(rng));
        case BallClass::Intermediate: return r * (0.5 + U(rng));
    }
    return 0.0;
}

Point center_point(const ConeModel& m, double uc, double yc) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(m.dim_u + 1);
    q(0) = uc;
    q(m.dim_u) = yc;
    return from_halfspace(m, q);
}

}  // namespace

DoublingReport doubling_check(const ConeModel& model, double sigma, int n_balls, const std::vector<double>& radii,
                              std::uint64_t seed) {
    if (!has_exact_uniformization(model)) fail(ErrorKind::Unsupported, "doubling_check: exact uniformization required");
    if (radii.empty()) fail(ErrorKind::InvalidArgument, "doubling_check: no radii");
    if (sigma <= volume_entropy(model)) fail(ErrorKind::Divergent, "doubling_check: sigma <= h");
    DoublingReport rep;
    rep.sigma = sigma;
    rep.r_min = *std::min_element(radii.begin(), radii.end());
    rep.r_max = *std::max_element(radii.begin(), radii.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    std::map<std::pair<int, double>, std::pair<double, double>> spread;  // (class, r) -> (min, max)
    for (int k = 0; k < n_balls; ++k) {
        BallClass c = class_of(k);
        double r = radii[(k / 3) % radii.size()];
        double yc = center_height(c, r, rng);
        Point ctr = center_point(model, U(rng), yc);
        double m1 = mu_sigma_ball(model, ctr, r, sigma).value;
        double m2 = mu_sigma_ball(model, ctr, 2.0 * r, sigma).value;
        double ratio = m2 / m1;
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        ++rep.n_balls;
        switch (c) {
            case BallClass::Boundary: ++rep.boundary; rep.worst_boundary = std::max(rep.worst_boundary, ratio); break;
            case BallClass::SubWhitney: ++rep.subwhitney; rep.worst_subwhitney = std::max(rep.worst_subwhitney, ratio); break;
            case BallClass::Intermediate: ++rep.intermediate; rep.worst_intermediate = std::max(rep.worst_intermediate, ratio); break;
        }
        auto key = std::make_pair(static_cast<int>(c), r);
        auto it = spread.find(key);
        if (it == spread.end()) spread[key] = {ratio, ratio};
        else it->second = {std::min(it->second.first, ratio), std::max(it->second.second, ratio)};
    }
    for (const auto& [key, mm] : spread) rep.center_spread = std::max(rep.center_spread, mm.second / mm.first);
    Point x(Eigen::VectorXd::Zero(model.dim_u), 0.0);
    double cone = mu_sigma_region(model, ConeRegion{x, 2.0, 0.0, INFINITY}, sigma).value;
    rep.cone_upper_K = cone / (std::exp(-sigma * x.t) * ambient_unit_ball_volume(model));
    return rep;
}

nlohmann::json to_json(const DoublingReport& r) {
    return {{"sigma", r.sigma}, {"worst_ratio", r.worst_ratio}, {"n_balls", r.n_balls},
            {"radius_range", {r.r_min, r.r_max}},
            {"center_classes", {{"boundary", r.boundary}, {"subwhitney", r.subwhitney}, {"intermediate", r.intermediate}}},
            {"worst_by_class", {{"boundary", r.worst_boundary}, {"subwhitney", r.worst_subwhitney}, {"intermediate", r.worst_intermediate}}},
            {"center_spread", r.center_spread}, {"cone_upper_K", r.cone_upper_K}};
}

std::vector<TestFunction> standard_test_functions(const ConeModel& model) {
    double a = model.a;
    std::vector<TestFunction> fs;
    fs.push_back({"u", [](double u, double) { return u; }, [](double, double) { return 1.0; }, false});
    // t = -log(a y)/a: ambient gradient 1, so the d_b gradient is 1/kappa = 1/(a y)
    fs.push_back({"t", [a](double, double y) { return -std::log(a * y) / a; }, [a](double, double y) { return 1.0 / (a * y); }, true});
    fs.push_back({"radial", [](double u, double y) { return std::hypot(u - 0.3, y - 0.7); }, [](double, double) { return 1.0; }, false});
    fs.push_back({"smooth_indicator",
                  [](double u, double y) { return 1.0 / (1.0 + std::exp((std::hypot(u + 0.2, y - 0.4) - 0.5) / 0.1)); },
                  [](double u, double y) {
                      double f = 1.0 / (1.0 + std::exp((std::hypot(u + 0.2, y - 0.4) - 0.5) / 0.1));
                      return f * (1.0 - f) / 0.1;
                  },
                  false});
    return fs;
}

namespace {

struct BallIntegral {
    double value = 0.0;
    double error = 0.0;
};

// int_B F(u,y) y^p du dy over the Euclidean disk, clipped to y >= 0.
BallIntegral disk_integral(double uc, double yc, double r, double p, const std::function<double(double, double)>& F) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double lo = std::max(0.0, yc - r), hi = yc + r;
    double inner_err = 0.0;
    auto slice = [&](double y) {
        double w = std::sqrt(std::max(0.0, r * r - (y - yc) * (y - yc)));
        if (w == 0.0) return 0.0;
        double e = 0.0;
        double v = GK::integrate([&](double u) { return F(u, y); }, uc - w, uc + w, 6, 1e-9, &e);
        inner_err = std::max(inner_err, e * 2.0 * w);
        return std::pow(y, p) * v;
    };
    boost::math::quadrature::tanh_sinh<double> ts(12);
    BallIntegral out;
    double err = 0.0, l1 = 0.0;
    out.value = ts.integrate(slice, lo, hi, 1e-8, &err, &l1);
    out.error = err * std::max(1.0, l1) + inner_err * (hi - lo);
    return out;
}

}  // namespace

PoincareReport poincare_check(const ConeModel& model, double sigma, const std::vector<TestFunction>& functions,
                              int n_balls, std::uint64_t seed) {
    if (!has_exact_uniformization(model) || model.dim_u != 1)
        fail(ErrorKind::Unsupported, "poincare_check: 1-D exact-uniformization models only");
    if (sigma <= volume_entropy(model)) fail(ErrorKind::Divergent, "poincare_check: sigma <= h");
    PoincareReport rep;
    rep.sigma = sigma;
    double a = model.a;
    double p = sigma / a - 2.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double radii[] = {0.25, 0.5, 1.0};
    for (int k = 0; k < n_balls; ++k) {
        BallClass c = class_of(k);
        double r = radii[(k / 3) % 3];
        double yc = center_height(c, r, rng);
        double uc = U(rng);
        auto one = [](double, double) { return 1.0; };
        BallIntegral mass = disk_integral(uc, yc, r, p, one);
        for (const auto& tf : functions) {
            PoincareBall pb{c, uc, yc, r, tf.name};
            if (tf.needs_interior && c != BallClass::SubWhitney) {
                ++rep.excluded;
                continue;
            }
            BallIntegral fm = disk_integral(uc, yc, r, p, tf.f);
            double mean = fm.value / mass.value;
            BallIntegral dev = disk_integral(uc, yc, r, p, [&](double u, double y) { return std::abs(tf.f(u, y) - mean); });
            BallIntegral gi = disk_integral(uc, yc, r, p, tf.g);
            pb.lhs = dev.value / mass.value;
            pb.rhs = 2.0 * r * gi.value / mass.value;
            double lhs_err = (dev.error + std::abs(mean) * mass.error + fm.error) / mass.value;
            double rhs_err = 2.0 * r * (gi.error + std::abs(gi.value / mass.value) * mass.error) / mass.value;
            if (!std::isfinite(pb.lhs) || !std::isfinite(pb.rhs) || lhs_err > 0.1 * std::max(pb.lhs, 1e-12) ||
                rhs_err > 0.1 * pb.rhs) {
                ++rep.excluded;
                continue;
            }
            pb.quotient = pb.rhs > 0 ? pb.lhs / pb.rhs : 0.0;
            rep.worst_quotient = std::max(rep.worst_quotient, pb.quotient);
            double& w = c == BallClass::Boundary ? rep.worst_boundary
                        : c == BallClass::SubWhitney ? rep.worst_subwhitney
                                                     : rep.worst_intermediate;
            w = std::max(w, pb.quotient);
            ++rep.evaluated;
            rep.balls.push_back(pb);
        }
    }
    return rep;
}

nlohmann::json to_json(const PoincareReport& r) {
    nlohmann::json balls = nlohmann::json::array();
    for (const auto& b : r.balls)
        balls.push_back({{"class", to_string(b.cls)}, {"uc", b.uc}, {"yc", b.yc}, {"r", b.r}, {"function", b.function},
                         {"lhs", b.lhs}, {"rhs", b.rhs}, {"quotient", b.quotient}});
    return {{"sigma", r.sigma}, {"worst_quotient", r.worst_quotient}, {"worst_boundary", r.worst_boundary},
            {"worst_subwhitney", r.worst_subwhitney}, {"worst_intermediate", r.worst_intermediate},
            {"evaluated", r.evaluated}, {"excluded", r.excluded}, {"balls", balls}};
}

GrowthTable critical_failure_demo(const ConeModel& model, const Eigen::VectorXd& boundary_u, double r, double sigma,
                                  const std::vector<double>& Ts) {
    GrowthTable tab;
    tab.sigma = sigma;
    Point xi = boundary_point_at(boundary_u);
    for (double T : Ts) {
        double m = mu_sigma_ball(model, xi, r, sigma, T).value;
        tab.rows.push_back({T, m, m / T});
    }
    for (std::size_t k = 1; k < tab.rows.size(); ++k) {
        if (!(tab.rows[k].mass > tab.rows[k - 1].mass)) tab.increasing = false;
        tab.last_increment_slope = (tab.rows[k].mass - tab.rows[k - 1].mass) / (tab.rows[k].T - tab.rows[k - 1].T);
    }
    return tab;
}

std::string to_csv(const GrowthTable& t) {
    std::ostringstream os;
    os.precision(12);
    os << "sigma,T,mass,mass_over_T\n";
    for (const auto& r : t.rows) os << t.sigma << ',' << r.T << ',' << r.mass << ',' << r.mass_over_T << '\n';
    return os.str();
}

}  // namespace cone_lab
