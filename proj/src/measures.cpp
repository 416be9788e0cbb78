#include "cone_lab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "cone_lab/hamenstadt.hpp"

namespace cone_lab {

std::string to_string(MeasureMethod m) {
    switch (m) {
        case MeasureMethod::Quadrature: return "quadrature";
        case MeasureMethod::MonteCarlo: return "monte_carlo";
        case MeasureMethod::ClosedForm: return "closed_form";
    }
    return "?";
}

nlohmann::json to_json(const MeasureEstimate& m) {
    return {{"value", m.value}, {"abs_error", m.abs_error}, {"method", to_string(m.method)}, {"n_evals", m.n_evals}};
}

double volume_entropy(const ConeModel& model) { return model.nominal_entropy(); }

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

double unit_ball_volume(int n) {
    if (n == 1) return 2.0;
    if (n == 2) return M_PI;
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

// int_{t_min}^{T} e^{(h - sigma) tau} d tau
double exp_window(double h, double sigma, double t_min, double T) {
    double k = h - sigma;
    if (std::isinf(T)) {
        if (k >= 0.0) fail(ErrorKind::Divergent, "mu_sigma: sigma <= h on an untruncated cone");
        return -std::exp(k * t_min) / k;
    }
    if (k == 0.0) return T - t_min;
    return (std::exp(k * T) - std::exp(k * t_min)) / k;
}

double leaf_integral(const ConeModel& m, double lo, double hi, double t, long& evals) {
    auto f = [&](double u) {
        ++evals;
        return m.phi(0, Eigen::VectorXd::Constant(1, u), t);
    };
    int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) * m.frequency)));
    double acc = 0.0;
    for (int k = 0; k < pieces; ++k)
        acc += GK::integrate(f, lo + (hi - lo) * k / pieces, lo + (hi - lo) * (k + 1) / pieces, 8, 1e-12);
    return acc;
}

// Sub-cone over the leaf interval [lo, hi] at height t0, lifted by tau in [t_min, T].
MeasureEstimate interval_cone_mass(const ConeModel& m, double t0, double lo, double hi, double sigma, double t_min,
                                   double T) {
    MeasureEstimate est;
    if (m.separable()) {
        est.method = MeasureMethod::ClosedForm;
        double h = volume_entropy(m);
        est.value = (hi - lo) * std::exp((h - sigma) * t0) * exp_window(h, sigma, t_min, T);
        return est;
    }
    est.method = MeasureMethod::Quadrature;
    double h = volume_entropy(m);
    if (std::isinf(T) && sigma <= h) fail(ErrorKind::Divergent, "mu_sigma: sigma <= h on an untruncated cone");
    auto f = [&](double tau) { return std::exp(-sigma * (t0 + tau)) * leaf_integral(m, lo, hi, t0 + tau, est.n_evals); };
    double err = 0.0;
    double tail = 0.0;
    double top = T;
    if (std::isinf(T)) {
        // phi <= e^{h t + |eps|}: cut where the remaining mass is below e^{-40} of the leading term
        top = t_min + 40.0 / (sigma - h);
        tail = (hi - lo) * std::exp(std::abs(m.epsilon) + (h - sigma) * (t0 + top) ) / (sigma - h);
    }
    int pieces = std::max(1, static_cast<int>(std::ceil((top - t_min) / 10.0)));
    est.value = 0.0;
    for (int k = 0; k < pieces; ++k) {
        double e = 0.0;
        est.value += GK::integrate(f, t_min + (top - t_min) * k / pieces, t_min + (top - t_min) * (k + 1) / pieces, 10, 1e-11, &e);
        err += e;
    }
    err += tail;
    if (!std::isfinite(est.value)) fail(ErrorKind::Divergent, "mu_sigma: quadrature did not converge");
    est.abs_error = err;
    return est;
}

}  // namespace

LeafBall rho_ball(const ConeModel& model, const Point& x, double radius) {
    if (!(radius > 0.0)) fail(ErrorKind::InvalidArgument, "rho_ball: radius must be positive");
    LeafBall b;
    b.center = x;
    b.radius = radius;
    // rho(x, y) < r iff the leaf distance after flowing by -log(r)/a is below 1
    double height = x.t - std::log(radius) / model.a;
    if (model.separable()) {
        b.semi_axes.resize(model.dim_u);
        for (int i = 0; i < model.dim_u; ++i) b.semi_axes(i) = std::exp(-model.rates[i] * height);
        if (model.dim_u == 1) {
            b.lo = x.u - b.semi_axes;
            b.hi = x.u + b.semi_axes;
        }
        return b;
    }
    if (model.dim_u != 1) fail(ErrorKind::Unsupported, "rho_ball: warped leaves are 1-D");
    double cap = std::exp(-model.base_rate * height + std::abs(model.epsilon)) * 1.001;
    auto reach = [&](double dir) {
        auto g = [&](double d) {
            Point p(x.u(0) + dir * d, height), q(x.u(0), height);
            return leaf_distance(model, q, p) - 1.0;
        };
        boost::math::tools::eps_tolerance<double> tol(48);
        std::uintmax_t it = 200;
        auto br = boost::math::tools::toms748_solve(g, 0.0, cap, -1.0, g(cap), tol, it);
        return 0.5 * (br.first + br.second);
    };
    b.lo = Eigen::VectorXd::Constant(1, x.u(0) - reach(-1.0));
    b.hi = Eigen::VectorXd::Constant(1, x.u(0) + reach(1.0));
    return b;
}

MeasureEstimate mu_sigma_region(const ConeModel& model, const ConeRegion& region, double sigma) {
    if (!(region.T > region.t_min)) fail(ErrorKind::InvalidArgument, "mu_sigma_region: empty height window");
    if (model.separable()) {
        double h = volume_entropy(model);
        MeasureEstimate est;
        est.method = MeasureMethod::ClosedForm;
        est.value = unit_ball_volume(model.dim_u) * std::pow(region.radius, h / model.a) *
                    std::exp(-sigma * region.apex.t) * exp_window(h, sigma, region.t_min, region.T);
        return est;
    }
    LeafBall b = rho_ball(model, region.apex, region.radius);
    return interval_cone_mass(model, region.apex.t, b.lo(0), b.hi(0), sigma, region.t_min, region.T);
}

MeasureEstimate mu_sigma_ball(const ConeModel& model, const Point& center, double r, double sigma, double T_max) {
    if (!has_exact_uniformization(model)) fail(ErrorKind::Unsupported, "mu_sigma_ball: exact uniformization required");
    int n = model.dim_u;
    if (n > 2) fail(ErrorKind::Unsupported, "mu_sigma_ball: leaf dimension > 2");
    double a = model.a;
    double p = sigma / a - n - 1.0;
    double yc = kappa(model, center) / a;
    double y_floor = std::isinf(T_max) ? 0.0 : std::exp(-a * T_max) / a;
    double lo = std::max(y_floor, yc - r), hi = yc + r;
    MeasureEstimate est;
    est.method = MeasureMethod::Quadrature;
    if (hi <= lo) return est;
    if (lo == 0.0 && p <= -1.0) fail(ErrorKind::Divergent, "mu_sigma_ball: ball meets the boundary at sigma <= h");
    double c = std::pow(a, p);
    auto slice = [&](double y) {
        double w = std::max(0.0, r * r - (y - yc) * (y - yc));
        return n == 1 ? 2.0 * std::sqrt(w) : M_PI * w;
    };
    auto f = [&](double y) {
        ++est.n_evals;
        return c * std::pow(y, p) * slice(y);
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    double err = 0.0;
    est.value = integrator.integrate(f, lo, hi, 1e-12, &err);
    est.abs_error = err * std::max(1.0, std::abs(est.value));
    return est;
}

namespace {

// Evaluates V_{s,l}(x) for a fixed ball; the ball is computed once.
struct Counter {
    const ConeModel& m;
    Point x;
    double l;
    LeafBall ball;

    Counter(const ConeModel& model, const Point& x_, double l_)
        : m(model), x(x_), l(l_), ball(rho_ball(model, x_, std::exp(-model.a * l_))) {}

    // Radii of the ball in units of the separation at scale s (separable models).
    Eigen::VectorXd scaled_radii(double s) const {
        Eigen::VectorXd R(m.dim_u);
        for (int i = 0; i < m.dim_u; ++i) R(i) = std::exp(m.rates[i] * (x.t + s)) * ball.semi_axes(i);
        return R;
    }

    // Leaf length of the ball at height x.t + s (1-D).
    double span(double s) const {
        if (m.separable()) return 2.0 * scaled_radii(s)(0);
        return leaf_distance(m, Point(ball.lo(0), x.t + s), Point(ball.hi(0), x.t + s));
    }

    // asymptotic: past Rs > 2000 the 2-D count is replaced by the ellipse area;
    // the lattice discrepancy is below the perimeter, added to *err when given
    double count(double s, double* err = nullptr) const {
        if (m.dim_u == 1) return std::floor(span(s) * (1.0 + 1e-12) + 1e-9) + 1.0;
        if (m.dim_u != 2 || !m.separable()) fail(ErrorKind::Unsupported, "separated_count: unsupported leaf");
        Eigen::VectorXd R = scaled_radii(s);
        double Rs = std::min(R(0), R(1)), Rl = std::max(R(0), R(1));
        if (err && Rs > 2000.0) {
            *err += 2.0 * M_PI * Rl + 4.0;
            return M_PI * Rs * Rl;
        }
        if (Rs > 5e7) fail(ErrorKind::InvalidArgument, "separated_count: scale too large");
        long kmax = static_cast<long>(std::floor(Rs * (1.0 + 1e-12)));
        double total = 0.0;
        for (long k = -kmax; k <= kmax; ++k) {
            double q = 1.0 - double(k) * double(k) / (Rs * Rs);
            double mm = std::floor(Rl * std::sqrt(std::max(0.0, q)) * (1.0 + 1e-12) + 1e-9);
            total += 2.0 * mm + 1.0;
        }
        return total;
    }
};

}  // namespace

double separated_count_value(const ConeModel& model, const Point& x, double s, double l) {
    if (s < l) fail(ErrorKind::InvalidArgument, "separated_count: requires s >= l");
    Point c = x.dim() == model.dim_u ? x : Point(Eigen::VectorXd::Zero(model.dim_u), 0.0);
    return Counter(model, c, l).count(s);
}

NetResult separated_count(const ConeModel& model, const Point& x, double s, double l, const NetOptions& opt) {
    if (s < l) fail(ErrorKind::InvalidArgument, "separated_count: requires s >= l");
    Counter ctr(model, x, l);
    NetResult net;
    net.center = x;
    net.ball_radius = std::exp(-model.a * l);
    net.separation = std::exp(-model.a * s);
    double c = ctr.count(s);
    if (c > 9.0e18) fail(ErrorKind::InvalidArgument, "separated_count: count overflows");
    net.count = static_cast<std::int64_t>(c);
    if (net.count > opt.max_points) {
        net.points_complete = false;
        return net;
    }
    double height = x.t + s;
    if (model.dim_u == 1) {
        // step the leaf length at height x.t + s by exactly 1 from the left endpoint
        double lo = ctr.ball.lo(0);
        if (model.separable()) {
            double step = std::exp(-model.rates[0] * height);
            for (std::int64_t k = 0; k < net.count; ++k) net.points.push_back(Eigen::VectorXd::Constant(1, lo + k * step));
        } else {
            double prev = lo;
            net.points.push_back(Eigen::VectorXd::Constant(1, lo));
            for (std::int64_t k = 1; k < net.count; ++k) {
                auto g = [&](double u) { return leaf_distance(model, Point(prev, height), Point(u, height)) - 1.0; };
                double hi = prev + std::exp(-model.base_rate * height + std::abs(model.epsilon)) * 1.001;
                boost::math::tools::eps_tolerance<double> tol(48);
                std::uintmax_t it = 200;
                auto br = boost::math::tools::toms748_solve(g, prev, hi, -1.0, g(hi), tol, it);
                prev = br.second;  // upper end keeps the step at least 1
                net.points.push_back(Eigen::VectorXd::Constant(1, prev));
            }
        }
        return net;
    }
    // 2-D separable: unit lattice in coordinates scaled to the separation, then boundary completion
    Eigen::VectorXd R = ctr.scaled_radii(s);
    Eigen::Vector2d scale(std::exp(-model.rates[0] * height), std::exp(-model.rates[1] * height));
    auto inside = [&](double v0, double v1) { return (v0 * v0) / (R(0) * R(0)) + (v1 * v1) / (R(1) * R(1)) <= 1.0 + 1e-12; };
    std::vector<Eigen::Vector2d> pts;
    long k0 = static_cast<long>(std::floor(R(0) * (1.0 + 1e-12)));
    for (long i = -k0; i <= k0; ++i) {
        double q = 1.0 - double(i) * double(i) / (R(0) * R(0));
        long m1 = static_cast<long>(std::floor(R(1) * std::sqrt(std::max(0.0, q)) * (1.0 + 1e-12) + 1e-9));
        for (long j = -m1; j <= m1; ++j) pts.emplace_back(double(i), double(j));
    }
    std::vector<Eigen::Vector2d> extra;
    if (opt.audit) {
        auto covered = [&](const Eigen::Vector2d& p) {
            for (long i = long(std::floor(p(0))) - 1; i <= long(std::floor(p(0))) + 2; ++i)
                for (long j = long(std::floor(p(1))) - 1; j <= long(std::floor(p(1))) + 2; ++j)
                    if (inside(double(i), double(j)) && std::hypot(p(0) - i, p(1) - j) < 1.0) return true;
            for (const auto& e : extra)
                if ((p - e).norm() < 1.0) return true;
            return false;
        };
        double perim = 2.0 * M_PI * std::max(R(0), R(1));
        int nth = std::max(64, static_cast<int>(std::ceil(perim / 0.05)));
        for (double band : {1.0, 0.98, 0.95, 0.9, 0.8}) {
            for (int k = 0; k < nth; ++k) {
                double th = 2.0 * M_PI * k / nth;
                Eigen::Vector2d p(band * R(0) * std::cos(th), band * R(1) * std::sin(th));
                if (!covered(p)) extra.push_back(p);
            }
        }
    }
    net.completions = static_cast<int>(extra.size());
    for (const auto& e : extra) pts.push_back(e);
    net.count = static_cast<std::int64_t>(pts.size());
    for (const auto& p : pts) {
        Eigen::VectorXd u(2);
        u << x.u(0) + p(0) * scale(0), x.u(1) + p(1) * scale(1);
        net.points.push_back(u);
    }
    return net;
}

NetAudit audit_net(const ConeModel& model, const NetResult& net, int grid) {
    NetAudit au;
    const auto& P = net.points;
    double t0 = net.center.t;
    auto r = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& q) { return rho(model, Point(p, t0), Point(q, t0)).value; };
    for (std::size_t i = 0; i < P.size(); ++i)
        for (std::size_t j = i + 1; j < P.size(); ++j)
            au.min_separation_ratio = std::min(au.min_separation_ratio, r(P[i], P[j]) / net.separation);
    au.separated = au.min_separation_ratio >= 1.0 - 1e-6;
    // audit grid over the closed ball
    std::vector<Eigen::VectorXd> G;
    LeafBall b = rho_ball(model, net.center, net.ball_radius);
    if (model.dim_u == 1) {
        for (int k = 0; k <= grid; ++k) G.push_back(Eigen::VectorXd::Constant(1, b.lo(0) + (b.hi(0) - b.lo(0)) * k / grid));
    } else {
        int side = std::max(8, static_cast<int>(std::sqrt(double(grid))));
        for (int i = -side; i <= side; ++i)
            for (int j = -side; j <= side; ++j) {
                double v0 = double(i) / side, v1 = double(j) / side;
                if (v0 * v0 + v1 * v1 > 1.0) continue;
                Eigen::VectorXd u(2);
                u << net.center.u(0) + v0 * b.semi_axes(0), net.center.u(1) + v1 * b.semi_axes(1);
                G.push_back(u);
            }
    }
    au.grid = static_cast<int>(G.size());
    for (const auto& g : G) {
        double best = INFINITY;
        for (const auto& p : P) {
            if ((g - p).norm() == 0.0) {
                best = 0.0;
                break;
            }
            best = std::min(best, r(g, p));
        }
        au.max_gap_ratio = std::max(au.max_gap_ratio, best / net.separation);
    }
    au.maximal = au.max_gap_ratio < 1.0 + 1e-6;
    return au;
}

EntropyReport entropy_estimate(const ConeModel& model, int s_max, const Point& x) {
    if (s_max < 6) fail(ErrorKind::InvalidArgument, "entropy_estimate: s_max >= 6 required");
    Point c = x.dim() == model.dim_u ? x : Point(Eigen::VectorXd::Zero(model.dim_u), 0.0);
    Counter ctr(model, c, 0.0);
    EntropyReport rep;
    rep.slack = std::pow(2.0, model.dim_u);
    for (int s = 1; s <= s_max; ++s) {
        rep.s.push_back(s);
        rep.V.push_back(ctr.count(s));
    }
    for (std::size_t k = 1; k < rep.V.size(); ++k)
        if (rep.V[k] < rep.V[k - 1]) rep.monotone = false;
    if (!rep.monotone) fail(ErrorKind::Verification, "entropy_estimate: V_s not monotone");
    // least-squares slope of log V_s against s
    double n = rep.s.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < rep.s.size(); ++k) {
        double ly = std::log(rep.V[k]);
        sx += rep.s[k];
        sy += ly;
        sxx += rep.s[k] * rep.s[k];
        sxy += rep.s[k] * ly;
    }
    rep.h_est = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for (int s = 1; s <= s_max; ++s)
        for (int t = 1; s + t <= s_max; ++t) {
            double ratio = rep.V[s + t - 1] / (rep.V[s - 1] * rep.V[t - 1]);
            rep.worst_submult_ratio = std::max(rep.worst_submult_ratio, ratio);
            if (ratio > rep.slack) rep.submultiplicative = false;
        }
    for (std::size_t k = 0; k < rep.s.size(); ++k)
        if (rep.h_est > std::log(rep.slack * rep.V[k]) / rep.s[k] + 1e-12) rep.fekete = false;
    return rep;
}

nlohmann::json to_json(const EntropyReport& r) {
    return {{"h_est", r.h_est}, {"s", r.s}, {"V", r.V}, {"monotone", r.monotone},
            {"submultiplicative", r.submultiplicative}, {"worst_submult_ratio", r.worst_submult_ratio},
            {"slack", r.slack}, {"fekete", r.fekete}};
}

LaplaceG laplace_G(const ConeModel& model, double sigma, double s_max, double h_est, double dt, const Point& x) {
    if (sigma <= h_est) fail(ErrorKind::Divergent, "laplace_G: sigma <= h_est");
    Point c = x.dim() == model.dim_u ? x : Point(Eigen::VectorXd::Zero(model.dim_u), 0.0);
    Counter ctr(model, c, 0.0);
    int N = static_cast<int>(std::ceil(s_max / dt));
    double step = s_max / N;
    std::vector<double> V(N + 1), Verr(N + 1, 0.0);
    for (int j = 0; j <= N; ++j) V[j] = ctr.count(j * step, &Verr[j]);
    // V_t is nondecreasing, so left and right step sums bracket the integral
    double lo = 0.0, hi = 0.0, lattice = 0.0;
    for (int j = 0; j < N; ++j) {
        double E = (std::exp(-sigma * j * step) - std::exp(-sigma * (j + 1) * step)) / sigma;
        lo += V[j] * E;
        hi += V[j + 1] * E;
        lattice += Verr[j + 1] * E;
    }
    double C = 0.0;
    for (int j = 0; j <= N; ++j)
        if (j * step >= s_max - 2.0) C = std::max(C, V[j] * std::exp(-h_est * j * step));
    LaplaceG g;
    g.h_used = h_est;
    g.tail = C * std::exp((h_est - sigma) * s_max) / (sigma - h_est);
    g.quad_error = 0.5 * (hi - lo) + lattice;
    g.value = 0.5 * (lo + hi) + g.tail;
    return g;
}

CritReport crit_ratio(const ConeModel& model, const Point& x, double sigma, double h_est, double s_max) {
    CritReport rep;
    auto mass = [&](const Point& apex, double r, double T) {
        return mu_sigma_region(model, ConeRegion{apex, r, 0.0, T}, sigma).value;
    };
    rep.numerator = mass(x, 1.0, INFINITY);
    rep.G = laplace_G(model, sigma, s_max, h_est, 0.005, x).value;
    rep.ratio = rep.numerator / (std::exp(-sigma * x.t) * rep.G);
    double a = model.a;
    // l = 1: C(x, e^{a}) plus the truncated cone C_1(f^{-1} x, 1)
    double pos = mass(x, std::exp(a), INFINITY) + mass(flow(model, x, -1.0), 1.0, 1.0);
    rep.shifted_pos = pos / (std::exp(-sigma * (x.t - 1.0)) * rep.G);
    // l = -1: C(x, e^{-a}) minus C_1(x, e^{-a})
    double neg = mass(x, std::exp(-a), INFINITY) - mass(x, std::exp(-a), 1.0);
    rep.shifted_neg = neg / (std::exp(-sigma * (x.t + 1.0)) * rep.G);
    return rep;
}

double RenormalizedMeasure::cone_mass(const Point& c, double r) const {
    const ConeModel& m = *model;
    LeafBall outer = rho_ball(m, apex, std::exp(m.a * l));
    LeafBall inner = rho_ball(m, c, r);
    double sub = 0.0;
    if (m.dim_u == 1) {
        if (inner.lo(0) < outer.lo(0) - 1e-12 || inner.hi(0) > outer.hi(0) + 1e-12) return NAN;
        sub = interval_cone_mass(m, apex.t, inner.lo(0), inner.hi(0), sigma, 0.0, INFINITY).value;
    } else {
        // ellipsoid containment checked on the boundary of the inner ball
        for (int k = 0; k < 360; ++k) {
            double th = 2.0 * M_PI * k / 360.0;
            double v0 = (c.u(0) - apex.u(0) + inner.semi_axes(0) * std::cos(th)) / outer.semi_axes(0);
            double v1 = (c.u(1) - apex.u(1) + inner.semi_axes(1) * std::sin(th)) / outer.semi_axes(1);
            if (v0 * v0 + v1 * v1 > 1.0 + 1e-12) return NAN;
        }
        double leb = M_PI * inner.semi_axes(0) * inner.semi_axes(1);
        double hh = volume_entropy(m);
        sub = leb * std::exp((hh - sigma) * apex.t) / (sigma - hh);
    }
    return std::exp(sigma * l) * sub / normalizer;
}

double RenormalizedMeasure::interior_mass_below(double T) const {
    auto it = interior_below.find(T);
    if (it != interior_below.end()) return it->second;
    double trunc = mu_sigma_region(*model, ConeRegion{apex, std::exp(model->a * l), 0.0, T}, sigma).value;
    return std::exp(sigma * l) * trunc / normalizer;
}

RenormalizedMeasure ps_renormalize(const ConeModel& model, const Point& x, double sigma, double l, int n_cells,
                                   const std::vector<double>& Ts) {
    if (std::abs(x.t) > 1e-12) fail(ErrorKind::InvalidArgument, "ps_renormalize: b(x) must vanish");
    RenormalizedMeasure m;
    m.model = &model;
    m.sigma = sigma;
    m.l = l;
    m.h = volume_entropy(model);
    m.apex = x;
    double R = std::exp(model.a * l);
    m.normalizer = mu_sigma_region(model, ConeRegion{x, R, 0.0, INFINITY}, sigma).value;
    m.total_mass = std::exp(sigma * l);
    for (double T : Ts) m.interior_below[T] = m.interior_mass_below(T);
    if (model.dim_u == 1 && n_cells > 0) {
        LeafBall b = rho_ball(model, x, R);
        double lo = b.lo(0), hi = b.hi(0);
        for (int k = 0; k < n_cells; ++k) {
            PartitionCell cell;
            cell.lo = Eigen::VectorXd::Constant(1, lo + (hi - lo) * k / n_cells);
            cell.hi = Eigen::VectorXd::Constant(1, lo + (hi - lo) * (k + 1) / n_cells);
            MeasureEstimate e = interval_cone_mass(model, x.t, cell.lo(0), cell.hi(0), sigma, 0.0, INFINITY);
            cell.mass = m.total_mass * e.value / m.normalizer;
            cell.error = m.total_mass * e.abs_error / m.normalizer;
            cell.reliable = cell.error <= 1e-3 * std::max(cell.mass, 1e-300);
            m.partition.push_back(cell);
        }
    }
    return m;
}

AhlforsReport ahlfors_check(const RenormalizedMeasure& m, const std::vector<double>& radii, int centers,
                            std::uint64_t seed) {
    if (m.model == nullptr) fail(ErrorKind::InvalidArgument, "ahlfors_check: empty measure");
    const ConeModel& model = *m.model;
    AhlforsReport rep;
    rep.exponent = m.h / model.a;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    LeafBall outer = rho_ball(model, m.apex, std::exp(model.a * m.l));
    double hi = 0.0, lo = INFINITY;
    std::vector<double> per_center;
    // keep the largest ball inside the partition ball when the geometry allows it
    double r_max = *std::max_element(radii.begin(), radii.end());
    LeafBall big = rho_ball(model, m.apex, r_max);
    for (int c = 0; c < centers; ++c) {
        Eigen::VectorXd u = m.apex.u;
        if (model.dim_u == 1) {
            double room = 0.5 * (outer.hi(0) - outer.lo(0)) - 0.5 * (big.hi(0) - big.lo(0));
            if (room <= 0.0) room = 0.5 * (outer.hi(0) - outer.lo(0));
            u(0) = 0.5 * (outer.lo(0) + outer.hi(0)) + 2.0 * U(rng) * room * 0.999;
        } else {
            double room = 1.0 - std::max(big.semi_axes(0) / outer.semi_axes(0), big.semi_axes(1) / outer.semi_axes(1));
            if (room <= 0.0) room = 0.5;
            for (int i = 0; i < model.dim_u; ++i) u(i) += U(rng) * outer.semi_axes(i) * room * 0.999 * std::sqrt(2.0);
        }
        Point cp(u, m.apex.t);
        double acc = 0.0;
        int used = 0;
        for (double r : radii) {
            double mass = m.cone_mass(cp, r);
            if (!std::isfinite(mass)) {
                ++rep.excluded;
                continue;
            }
            double ratio = mass / std::pow(r, rep.exponent);
            rep.ratios.push_back(ratio);
            hi = std::max(hi, ratio);
            lo = std::min(lo, ratio);
            acc += ratio;
            ++used;
        }
        if (used > 0) per_center.push_back(acc / used);
    }
    if (!rep.ratios.empty()) rep.K = std::max(hi, 1.0 / lo);
    if (!per_center.empty()) {
        auto [mn, mx] = std::minmax_element(per_center.begin(), per_center.end());
        rep.center_spread = *mx / *mn;
    }
    return rep;
}

MargulisReport margulis_checks(const ConeModel& model, const ChartBox& box, double t) {
    if (!model.separable()) fail(ErrorKind::Unsupported, "margulis_checks: nu is exact only for homogeneous leaves");
    MargulisReport rep;
    rep.h = volume_entropy(model);
    // B_rho(x, 1) at height 0 has semi-axes 1
    rep.nu_normalization = 1.0 / unit_ball_volume(model.dim_u);
    double h = rep.h, c = rep.nu_normalization;
    int n = model.dim_u;
    auto leaf_mass = [&](double s) {
        // nu at height s of E: c e^{hs} Leb(E), integrated over E
        auto dens = [&](double) { return c * std::exp(h * s); };
        double v = GK::integrate(dens, box.u_lo(0), box.u_hi(0), 5, 1e-13);
        for (int i = 1; i < n; ++i) v *= box.u_hi(i) - box.u_lo(i);
        return v;
    };
    auto order_one = [&](double t0, double t1) { return GK::integrate(leaf_mass, t0, t1, 10, 1e-13); };
    rep.mass = order_one(box.t0, box.t1);
    auto fiber = [&](double) {
        return GK::integrate([&](double s) { return std::exp(h * s); }, box.t0, box.t1, 10, 1e-13);
    };
    double flipped = GK::integrate([&](double u) { return c * fiber(u); }, box.u_lo(0), box.u_hi(0), 5, 1e-13);
    for (int i = 1; i < n; ++i) flipped *= box.u_hi(i) - box.u_lo(i);
    rep.mass_flipped = flipped;
    rep.flip_error = std::abs(rep.mass - rep.mass_flipped);
    rep.image_mass = order_one(box.t0 + t, box.t1 + t);
    rep.scaling_error = std::abs(rep.image_mass / (std::exp(h * t) * rep.mass) - 1.0);
    return rep;
}

HolonomyInvarianceReport holonomy_invariance_check(const SuspensionModel& s, double r, double v, double d_s,
                                                   double R) {
    HolonomyInvarianceReport rep;
    const ConeModel& cov = s.cover;
    double h = volume_entropy(cov);
    double c = 0.5;
    SPoint x{Eigen::Vector2d(0.1, 0.2), 0.0};
    Point xc = s.cover_point(x);
    LeafBall B = rho_ball(cov, xc, r);
    double lo = B.lo(0), hi = B.hi(0);
    auto window = [&](double center) { return (std::exp(h * (center + v)) - std::exp(h * (center - v))) / h; };
    rep.mass_U = c * window(x.t) * (hi - lo);

    // V = h^s(U): image leaf coordinate and height offset psi at each point of B, by the explicit holonomy
    SPoint y = s.along_stable(x, d_s);
    auto image = [&](double xu) {
        SPoint z = s.along_unstable(x, xu - xc.u(0));
        return s.cover_point(s.holonomy_s(x, y, z));
    };
    double eps = 1e-6 * std::max(1.0, hi - lo);
    auto integrand = [&](double xu) {
        Point w = image(xu);
        double J = (image(xu + eps).u(0) - image(xu - eps).u(0)) / (2.0 * eps);
        return c * std::abs(J) * window(w.t);
    };
    rep.mass_V = GK::integrate(integrand, lo, hi, 8, 1e-12);
    rep.s_discrepancy = std::abs(rep.mass_V / rep.mass_U - 1.0);

    // cs-holonomy across d^cs = R: half along W^s, half along the flow
    SPoint y2 = s.flow(s.along_stable(x, 0.5 * R), 0.5 * R);
    SPoint zl = s.along_unstable(x, lo - xc.u(0)), zr = s.along_unstable(x, hi - xc.u(0));
    Point il = s.cover_point(s.holonomy_cs(x, y2, zl)), ir = s.cover_point(s.holonomy_cs(x, y2, zr));
    double nu_x = c * std::exp(h * x.t) * (hi - lo);
    double nu_y = c * std::exp(h * y2.t) * std::abs(ir.u(0) - il.u(0));
    rep.cs_ratio = nu_y / nu_x;
    rep.K_R = bilipschitz_estimate(s, R).K;
    double e = h / cov.a + 1.0;
    rep.cs_within = rep.cs_ratio >= std::pow(rep.K_R, -e) * (1 - 1e-9) && rep.cs_ratio <= std::pow(rep.K_R, e) * (1 + 1e-9);
    return rep;
}

}  // namespace cone_lab
