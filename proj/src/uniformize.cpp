#include "cone_lab/uniformize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "cone_lab/hamenstadt.hpp"

namespace cone_lab {

double kappa(const ConeModel& model, const Point& x) {
    if (std::isinf(x.t) && x.t > 0) return 0.0;
    return std::exp(-model.a * x.t);
}

bool has_exact_uniformization(const ConeModel& model) { return model.separable() && model.equal_rates(); }

Eigen::VectorXd to_halfspace(const ConeModel& model, const Point& x) {
    Eigen::VectorXd q(x.dim() + 1);
    q.head(x.dim()) = x.u;
    q(x.dim()) = kappa(model, x) / model.a;
    return q;
}

Point from_halfspace(const ConeModel& model, const Eigen::VectorXd& q) {
    int n = static_cast<int>(q.size()) - 1;
    double y = q(n);
    double t = y > 0.0 ? -std::log(model.a * y) / model.a : INFINITY;
    return Point(Eigen::VectorXd(q.head(n)), t);
}

Point boundary_point_at(const Eigen::VectorXd& u) { return Point(u, INFINITY); }

double length_b(const ConeModel& model, const GeodesicPath& path) {
    const auto& s = path.samples;
    std::size_t n = s.size();
    if (n < 2) return 0.0;
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) f[k] = std::exp(-model.a * s[k].b);
    double h = s[1].s - s[0].s;
    bool uniform = true;
    for (std::size_t k = 1; k < n; ++k)
        if (std::abs((s[k].s - s[k - 1].s) - h) > 1e-9 * (1.0 + std::abs(h))) uniform = false;
    if (uniform && n % 2 == 1 && n >= 3) {
        double acc = f[0] + f[n - 1];
        for (std::size_t k = 1; k + 1 < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * f[k];
        return acc * h / 3.0;
    }
    double acc = 0.0;
    for (std::size_t k = 1; k < n; ++k) acc += 0.5 * (f[k] + f[k - 1]) * (s[k].s - s[k - 1].s);
    return acc;
}

std::string to_string(DbMethod m) {
    switch (m) {
        case DbMethod::Oracle: return "oracle";
        case DbMethod::GeodesicFamily: return "geodesic_family";
        case DbMethod::MeshDijkstra: return "mesh_dijkstra";
        case DbMethod::BrokenPath: return "broken_path";
    }
    return "?";
}

namespace {

bool at_boundary(const Point& p) { return std::isinf(p.t) && p.t > 0; }

// Lower bounds valid for every model: y = e^{-ab}/a is 1-Lipschitz for d_b, and a curve of
// ambient length >= d climbs at most d above its start.
double db_lower(const ConeModel& m, const Point& x, const Point& y, double d) {
    double a = m.a;
    double l1 = std::abs(kappa(m, x) - kappa(m, y)) / a;
    double decay = -std::expm1(-a * d);
    double l2 = std::max(kappa(m, x), kappa(m, y)) * decay / a;
    return std::max(l1, l2);
}

}  // namespace

namespace {

// descend vertically to height tau, cross the leaf there, climb back; best tau
double broken_path_length(const ConeModel& model, const Point& x, const Point& y) {
    double a = model.a;
    Eigen::VectorXd du = x.u - y.u;
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(model.dim_u);
    auto cost = [&](double tau) {
        double leaf = 0.0;
        for (int i = 0; i < model.dim_u; ++i) {
            double w = model.phi(i, u0, tau) * du[i];
            leaf += w * w;
        }
        double down = (std::exp(-a * tau) - std::exp(-a * x.t)) / a + (std::exp(-a * tau) - std::exp(-a * y.t)) / a;
        return down + std::exp(-a * tau) * std::sqrt(leaf);
    };
    double hi = std::min(x.t, y.t);
    auto res = boost::math::tools::brent_find_minima(cost, hi - 80.0, hi, 40);
    return std::min(res.second, cost(hi));
}

}  // namespace

UniformizedDistance d_b(const ConeModel& model, const Point& x, const Point& y, bool use_mesh) {
    UniformizedDistance r;
    if (has_exact_uniformization(model)) {
        r.value = (to_halfspace(model, x) - to_halfspace(model, y)).norm();
        r.lower = r.upper = r.value;
        r.method = DbMethod::Oracle;
        return r;
    }
    if (at_boundary(x) || at_boundary(y)) fail(ErrorKind::Unsupported, "d_b: boundary points need boundary_d_b outside the exact models");
    if (same_point(x, y)) return r;
    if ((x.u - y.u).norm() == 0.0) {
        // vertical segments are geodesics in every chart model
        r.value = std::abs(kappa(model, x) - kappa(model, y)) / model.a;
        r.lower = r.upper = r.value;
        r.method = DbMethod::GeodesicFamily;
        return r;
    }
    double upper = INFINITY;
    double d = 0.0;
    bool have_geodesic = false;
    try {
        GeodesicOptions opt;
        opt.n_samples = 257;
        GeodesicPath path = geodesic_connect(model, x, y, opt);
        upper = length_b(model, path);
        d = path.total_length;
        have_geodesic = true;
        r.method = DbMethod::GeodesicFamily;
    } catch (const SolverError&) {
        use_mesh = true;
    }
    if (use_mesh && model.dim_u != 1) {
        if (!model.separable()) fail(ErrorKind::Unsupported, "d_b: mesh bounds need a 1-D leaf");
        if (!have_geodesic) {
            r.upper = r.value = broken_path_length(model, x, y);
            r.lower = std::abs(kappa(model, x) - kappa(model, y)) / model.a;
            r.method = DbMethod::BrokenPath;
        } else {
            r.upper = r.value = std::min(upper, broken_path_length(model, x, y));
            r.lower = db_lower(model, x, y, d);
        }
        return r;
    }
    if (use_mesh) {
        MeshOptions mo;
        mo.weight_a = model.a;
        MeshResult mr = mesh_distance(model, x, y, mo);
        if (mr.length < upper) {
            upper = mr.length;
            if (!have_geodesic) r.method = DbMethod::MeshDijkstra;
        }
        if (!have_geodesic) d = mesh_distance(model, x, y, MeshOptions{}).length;
    }
    r.upper = upper;
    r.value = upper;
    // without a certified geodesic length only the height bound is safe
    r.lower = have_geodesic ? db_lower(model, x, y, d) : std::abs(kappa(model, x) - kappa(model, y)) / model.a;
    return r;
}

double boundary_distance(const ConeModel& model, const Point& x) {
    if (at_boundary(x)) return 0.0;
    if (model.separable()) return kappa(model, x) / model.a;
    // ascending ray: unit speed in t, weight e^{-a s}
    boost::math::quadrature::exp_sinh<double> integrator;
    double a = model.a;
    double t0 = x.t;
    auto f = [&](double s) { return std::exp(-a * (t0 + s)); };
    return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity());
}

Eigen::VectorXd boundary_point(const ConeModel& /*model*/, const Point& x) { return x.u; }

BoundaryLimit boundary_d_b(const ConeModel& model, const Point& w, const Point& z, const std::vector<double>& offsets,
                           double cauchy_tol) {
    BoundaryLimit out;
    for (double off : offsets) {
        Point pw(w.u, w.t + off), pz(z.u, z.t + off);
        out.heights.push_back(w.t + off);
        out.values.push_back(d_b(model, pw, pz).value);
    }
    for (std::size_t k = 2; k < out.values.size(); ++k)
        if (std::abs(out.values[k] - out.values[k - 1]) >= cauchy_tol) out.cauchy = false;
    out.limit = out.values.empty() ? 0.0 : out.values.back();
    return out;
}

BilipschitzBoundaryReport boundary_bilipschitz_check(const ConeModel& model, const Point& x,
                                                     const std::vector<std::pair<Point, Point>>& pairs) {
    BilipschitzBoundaryReport rep;
    double scale = std::exp(-model.a * x.t);
    double hi = 1.0, lo = 1.0;
    for (const auto& [w, z] : pairs) {
        if (std::abs(w.t - x.t) > 1e-12 || std::abs(z.t - x.t) > 1e-12)
            fail(ErrorKind::InvalidArgument, "boundary_bilipschitz_check: pairs must lie on the leaf of x");
        ++rep.pairs;
        if (same_point(w, z)) continue;
        BoundaryLimit lim = boundary_d_b(model, w, z);
        if (!lim.cauchy) ++rep.non_cauchy;
        double r = lim.limit / (scale * rho(model, w, z).value);
        rep.ratios.push_back(r);
        hi = std::max(hi, r);
        lo = std::min(lo, r);
    }
    rep.K = std::max(hi, 1.0 / lo);
    return rep;
}

namespace {

double rho_fast(const ConeModel& m, const Point& x, const Point& y) {
    if (has_exact_uniformization(m)) return std::exp(m.a * x.t) * (y.u - x.u).norm();
    return rho(m, x, y).value;
}

}  // namespace

bool cone_contains(const ConeModel& model, const ConeRegion& c, const Point& p) {
    double rise = p.t - c.apex.t;
    if (at_boundary(p)) {
        if (!std::isinf(c.T)) return false;
    } else if (!(rise > c.t_min && rise <= c.T)) {
        return false;
    }
    Point q(p.u, c.apex.t);
    if (same_point(q, c.apex)) return true;
    return rho_fast(model, c.apex, q) < c.radius;
}

nlohmann::json to_json(const ConeRegion& c) {
    nlohmann::json j;
    j["apex_u"] = std::vector<double>(c.apex.u.data(), c.apex.u.data() + c.apex.u.size());
    j["apex_t"] = c.apex.t;
    j["radius"] = c.radius;
    j["t_min"] = c.t_min;
    j["T"] = std::isinf(c.T) ? nlohmann::json("inf") : nlohmann::json(c.T);
    return j;
}

namespace {

// Uniform sample of the open (u, y) half-ball of radius r around the boundary point over u0, plus rim points.
std::vector<Eigen::VectorXd> halfball_samples(const Eigen::VectorXd& c, double r, int n, std::mt19937_64& rng,
                                              double shrink) {
    int dim = static_cast<int>(c.size());
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Eigen::VectorXd> out;
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v(i) = g(rng);
        v(dim - 1) = std::abs(v(dim - 1));
        v.normalize();
        double rad = (k % 4 == 0 ? shrink : std::pow(U(rng), 1.0 / dim) * shrink) * r;
        out.push_back(c + rad * v);
    }
    return out;
}

}  // namespace

InclusionReport cone_ball_inclusions(const ConeModel& model, const Point& x, double r, double L_cap, int samples,
                                     std::uint64_t seed) {
    if (!has_exact_uniformization(model)) fail(ErrorKind::Unsupported, "cone_ball_inclusions: exact uniformization required");
    InclusionReport rep;
    std::mt19937_64 rng(seed);
    int dim = model.dim_u;
    Eigen::VectorXd xbar = to_halfspace(model, boundary_point_at(x.u));
    auto in_ball = [&](const Point& p) { return d_b(model, p, boundary_point_at(x.u)).value < r; };

    // points of B_b(xbar, r) reused for the outer inclusion
    std::vector<Point> ball_pts;
    for (const auto& q : halfball_samples(xbar, r, samples, rng, 1.0 - 1e-12)) ball_pts.push_back(from_halfspace(model, q));
    for (const auto& q : halfball_samples(xbar, r, samples / 4 + 1, rng, 1.0 - 1e-12)) {
        Eigen::VectorXd b = q;
        b(dim) = 0.0;
        ball_pts.push_back(from_halfspace(model, b));
    }
    rep.samples = static_cast<int>(ball_pts.size());

    auto cone_pts = [&](const Point& apex, double radius, int n) {
        // points of C(apex, radius): a leaf ball at the apex height, flowed upward or to the boundary
        std::vector<Point> pts;
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::normal_distribution<double> g;
        double reach = radius * std::exp(-model.a * apex.t);  // Euclidean leaf radius of the rho-ball
        for (int k = 0; k < n; ++k) {
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v(i) = g(rng);
            v.normalize();
            double rad = (k % 3 == 0 ? 1.0 - 1e-9 : std::pow(U(rng), 1.0 / dim)) * reach;
            Eigen::VectorXd u = apex.u + rad * v;
            double lift = k % 5 == 0 ? INFINITY : (k % 5 == 1 ? 1e-9 : -std::log(U(rng) + 1e-300));
            pts.emplace_back(u, apex.t + lift);
        }
        return pts;
    };

    auto works = [&](double L, double ts) {
        ConeRegion outer{flow(model, x, -ts), L, 0.0, INFINITY};
        for (const auto& p : ball_pts)
            if (!cone_contains(model, outer, p)) return false;
        Point inner_apex = flow(model, x, ts);
        for (const auto& p : cone_pts(inner_apex, 1.0 / L, samples))
            if (!in_ball(p)) return false;
        return true;
    };

    double best_L = INFINITY, best_t = NAN;
    for (int k = 0; k <= 300; ++k) {
        double ts = 0.01 * k;
        if (!works(L_cap, ts)) continue;
        double lo = 1.0, hi = L_cap;
        if (works(lo, ts)) hi = lo;
        else {
            for (int it = 0; it < 30; ++it) {
                double mid = 0.5 * (lo + hi);
                (works(mid, ts) ? hi : lo) = mid;
            }
        }
        if (hi < best_L - 1e-9) {
            best_L = hi;
            best_t = ts;
        }
        if (best_L == 1.0) break;
    }
    rep.cone_sandwich_found = std::isfinite(best_L);
    rep.L_star = best_L;
    rep.t_star = best_t;

    rep.C_star = NAN;
    double dbx = boundary_distance(model, x);
    if (r <= 0.5 * dbx) {
        // C* = max of d(x,y) / (r e^{ab}) over the d_b-sphere and its inverse minimum
        double scale = r * std::exp(model.a * x.t);
        Eigen::VectorXd qx = to_halfspace(model, x);
        double hi = 0.0, lo = INFINITY;
        std::normal_distribution<double> g;
        for (int k = 0; k < samples; ++k) {
            Eigen::VectorXd v(dim + 1);
            for (int i = 0; i <= dim; ++i) v(i) = g(rng);
            v.normalize();
            Point p = from_halfspace(model, Eigen::VectorXd(qx + r * v));
            double d = distance(model, x, p) / scale;
            hi = std::max(hi, d);
            lo = std::min(lo, d);
        }
        rep.C_star = std::max(hi, 1.0 / lo);
    }
    return rep;
}

nlohmann::json to_json(const InclusionReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"L_star", num(r.L_star)}, {"t_star", num(r.t_star)}, {"cone_sandwich_found", r.cone_sandwich_found},
            {"C_star", num(r.C_star)}, {"samples", r.samples}, {"inconclusive", r.inconclusive}};
}

SubWhitney subwhitney_center(const ConeModel& model, const Point& x, double r, double L) {
    if (!(r > 0.0)) fail(ErrorKind::InvalidArgument, "subwhitney_center: r must be positive");
    SubWhitney out;
    out.c0 = 1.0 / (6.0 * L);
    // z0 on the vertical geodesic with d_b(z0) = r; d_b decreases along the ascending ray
    auto g = [&](double t) { return boundary_distance(model, Point(x.u, t)) - r; };
    double lo = at_boundary(x) ? -1.0 : x.t - 1.0, hi = lo + 2.0;
    while (g(lo) < 0) lo -= 2.0 * (hi - lo);
    while (g(hi) > 0) hi += 2.0 * (hi - lo);
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t it = 200;
    auto br = boost::math::tools::toms748_solve(g, lo, hi, tol, it);
    double t0 = 0.5 * (br.first + br.second);
    double dbx = boundary_distance(model, x);
    double eta = std::abs(dbx - r);  // l_b of the vertical segment x -> z0
    if (eta >= 2.0 * r / 3.0) {
        out.first_case = true;
        // d_b-arclength r/3 from x toward z0
        double target = dbx < r ? dbx + r / 3.0 : dbx - r / 3.0;
        auto h = [&](double t) { return boundary_distance(model, Point(x.u, t)) - target; };
        double l2 = std::min(t0, at_boundary(x) ? t0 + 50.0 : x.t) - 1.0;
        double h2 = std::max(t0, at_boundary(x) ? t0 + 50.0 : x.t) + 1.0;
        while (h(l2) < 0) l2 -= 2.0;
        while (h(h2) > 0) h2 += 2.0;
        it = 200;
        auto b2 = boost::math::tools::toms748_solve(h, l2, h2, tol, it);
        out.z = Point(x.u, 0.5 * (b2.first + b2.second));
    } else {
        out.z = Point(x.u, t0);
    }
    return out;
}

UniformCurveReport uniform_curve_check(const ConeModel& model, const GeodesicPath& path) {
    UniformCurveReport rep;
    const auto& s = path.samples;
    std::size_t n = s.size();
    if (n < 2) return rep;
    std::vector<double> cum(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        // trapezoid on e^{-ab}; exact enough at the sample density of a geodesic
        cum[k] = cum[k - 1] + 0.5 * (std::exp(-model.a * s[k].b) + std::exp(-model.a * s[k - 1].b)) * (s[k].s - s[k - 1].s);
    }
    double total = cum.back();
    for (std::size_t k = 0; k < n; ++k) {
        double m = std::min(cum[k], total - cum[k]);
        double dbz = boundary_distance(model, s[k].p);
        if (dbz > 0) rep.L_one = std::max(rep.L_one, m / dbz);
    }
    double dend = d_b(model, path.start, path.end).value;
    rep.L_two = dend > 0 ? length_b(model, path) / dend : 1.0;
    rep.L = std::max(rep.L_one, rep.L_two);
    return rep;
}

}  // namespace cone_lab
