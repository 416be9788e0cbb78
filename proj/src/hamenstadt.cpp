#include "cone_lab/hamenstadt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cone_lab/geometry.hpp"

namespace cone_lab {

double flowed_leaf_distance(const ConeModel& model, const Point& x, const Point& y, double t) {
    return leaf_distance(model, flow(model, x, t), flow(model, y, t));
}

RhoEvaluation rho(const ConeModel& model, const Point& x, const Point& y, double tol) {
    if (std::abs(x.t - y.t) > 1e-12 * (1.0 + std::abs(x.t))) fail(ErrorKind::InvalidArgument, "rho: points on different leaves");
    if (tol <= 0.0) tol = model.separable() ? 1e-9 : 1e-6;
    RhoEvaluation r;
    r.tol = tol;
    double du = leaf_distance(model, x, y);
    if (du == 0.0) {
        r.value = 0.0;
        r.t_star = INFINITY;
        return r;
    }
    double L = std::log(du);
    double lo = std::min(-L / model.a, -L / model.A) - 1.0;
    double hi = std::max(-L / model.a, -L / model.A) + 1.0;
    auto g = [&](double t) { return flowed_leaf_distance(model, x, y, t) - 1.0; };
    // the rate sandwich guarantees the bracket; widening only guards against grid-measured rates
    for (int k = 0; g(lo) > 0.0; ++k) {
        if (k > 60) throw SolverError("rho: could not bracket t*", g(lo));
        lo -= 1.0 + (hi - lo);
    }
    for (int k = 0; g(hi) < 0.0; ++k) {
        if (k > 60) throw SolverError("rho: could not bracket t*", g(hi));
        hi += 1.0 + (hi - lo);
    }
    // relative accuracy tol on e^{-a t} needs |dt| < tol / a
    double width = 0.25 * tol / model.a;
    while (hi - lo > width) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (g(mid) <= 0.0) lo = mid;
        else hi = mid;
        if (++r.iterations > 400) throw SolverError("rho: bisection did not converge", hi - lo);
    }
    r.t_star = 0.5 * (lo + hi);
    r.value = std::exp(-model.a * r.t_star);
    return r;
}

double scaling_check(const ConeModel& model, const Point& x, const Point& y, double t, double tol) {
    double base = rho(model, x, y, tol).value;
    double moved = rho(model, flow(model, x, t), flow(model, y, t), tol).value;
    double expect = std::exp(model.a * t) * base;
    if (expect == 0.0) return moved == 0.0 ? 0.0 : INFINITY;
    return std::abs(moved - expect) / expect;
}

ComparisonReport comparison_check(const ConeModel& model, const Point& x, const Point& y, double tol) {
    ComparisonReport rep;
    if (tol <= 0.0) tol = model.separable() ? 1e-9 : 1e-6;
    double slack = 4.0 * tol;
    double ex = model.a / model.A;
    if (std::abs(x.t - y.t) <= 1e-12 * (1.0 + std::abs(x.t))) {
        rep.du = leaf_distance(model, x, y);
        rep.d = distance(model, x, y);
        rep.rho = rho(model, x, y, tol).value;
        if (rep.du <= 1.0) {
            rep.lower = rep.du;
            rep.upper = std::pow(rep.du, ex);
        } else {
            rep.lower = std::pow(rep.du, ex);
            rep.upper = rep.du;
        }
    } else {
        rep.on_leaf = false;
        rep.d = distance(model, x, y);
        Point py = project(model, x, y);
        rep.du = leaf_distance(model, x, py);
        rep.rho = rho(model, x, py, tol).value;
        rep.lower = 0.0;
        rep.upper = std::max(std::exp(model.A * rep.d) * rep.d, std::exp(model.a * rep.d) * std::pow(rep.d, ex));
    }
    rep.inside = rep.rho >= rep.lower * (1.0 - slack) && rep.rho <= rep.upper * (1.0 + slack);
    rep.upper_ratio = rep.upper > 0.0 ? rep.rho / rep.upper : 0.0;
    rep.lower_ratio = rep.rho > 0.0 ? rep.lower / rep.rho : 0.0;
    return rep;
}

double suspension_rho(const SuspensionModel& s, const SPoint& z, const SPoint& w) {
    return rho(s.cover, s.cover_point(z), s.cover_point(w)).value;
}

BilipschitzReport bilipschitz_estimate(const SuspensionModel& s, double R, int samples, std::uint64_t seed) {
    BilipschitzReport rep;
    rep.R = R;
    if (R < 0.0) fail(ErrorKind::InvalidArgument, "bilipschitz_estimate: R < 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double a = s.cover.a;
    for (int k = 0; k < samples; ++k) {
        SPoint x{Eigen::Vector2d(U(rng), U(rng)), U(rng)};
        // cs path: stable leg of leaf length |sigma| lambda^{-t}, then flow tau; total <= R
        double share = k < 2 ? 0.0 : U(rng);
        double total = k < 2 ? R : R * U(rng);
        double tau = (k % 2 == 0 ? 1.0 : -1.0) * (1.0 - share) * total;
        double sigma = (U(rng) < 0.5 ? -1.0 : 1.0) * share * total * std::pow(s.lambda, x.t);
        SPoint y = s.flow(s.along_stable(x, sigma), tau);
        double reach = R * std::exp(-a * x.t);
        SPoint z = s.along_unstable(x, reach * (2.0 * U(rng) - 1.0));
        SPoint w = s.along_unstable(x, reach * (2.0 * U(rng) - 1.0));
        double before = suspension_rho(s, z, w);
        if (before == 0.0) continue;
        double after = suspension_rho(s, s.holonomy_cs(x, y, z), s.holonomy_cs(x, y, w));
        rep.K = std::max({rep.K, after / before, before / after});
        rep.max_shift = std::max(rep.max_shift, std::abs(tau));
        ++rep.samples;
    }
    return rep;
}

double holonomy_equivariance_error(const SuspensionModel& s, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        SPoint x{Eigen::Vector2d(U(rng), U(rng)), U(rng)};
        SPoint y = s.flow(s.along_stable(x, 0.5 * U(rng)), 0.5 * U(rng));
        SPoint z = s.along_unstable(x, U(rng));
        double t = 3.0 * U(rng);
        SPoint lhs = s.holonomy_cs(s.flow(x, t), s.flow(y, t), s.flow(z, t));
        SPoint rhs = s.flow(s.holonomy_cs(x, y, z), t);
        worst = std::max(worst, (lhs.p - rhs.p).norm() + std::abs(lhs.t - rhs.t));
    }
    return worst;
}

}  // namespace cone_lab
