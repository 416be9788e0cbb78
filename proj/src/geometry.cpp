#include "cone_lab/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

namespace cone_lab {

double GeodesicPath::b_min() const {
    double m = INFINITY;
    for (const auto& s : samples) m = std::min(m, s.b);
    return m;
}

double halfplane_distance(double a, const Point& x, const Point& y) {
    double dX = a * (x.u(0) - y.u(0));
    double Y1 = std::exp(-a * x.t), Y2 = std::exp(-a * y.t);
    double dY = Y1 - Y2;
    // arccosh(1 + q) computed as log1p(q + sqrt(q (q + 2))) for accuracy at small q
    double q = (dX * dX + dY * dY) / (2.0 * Y1 * Y2);
    return std::log1p(q + std::sqrt(q * (q + 2.0))) / a;
}

namespace {

// State: u0, u1, t, p0, p1, pt (second leaf axis unused when dim_u = 1).
using State = std::array<double, 6>;

struct GeodesicRhs {
    const ConeModel& m;
    void operator()(const State& y, State& dy, double /*s*/) const {
        Eigen::VectorXd u(m.dim_u);
        for (int i = 0; i < m.dim_u; ++i) u(i) = y[i];
        double t = y[2];
        dy = {0, 0, 0, 0, 0, 0};
        dy[2] = y[5];
        for (int i = 0; i < m.dim_u; ++i) {
            double f = m.phi(i, u, t);
            double p = y[3 + i];
            double inv3 = 1.0 / (f * f * f);
            dy[i] = p / (f * f);
            dy[5] += p * p * m.dphi_dt(i, u, t) * inv3;
            for (int j = 0; j < m.dim_u; ++j) dy[3 + j] += p * p * m.dphi_du(i, j, u, t) * inv3;
        }
    }
};

using Stepper = boost::numeric::odeint::runge_kutta4<State>;

State initial_state(const ConeModel& m, const Point& x, double c, double sech, const Eigen::VectorXd& w) {
    State y{0, 0, 0, 0, 0, 0};
    for (int i = 0; i < m.dim_u; ++i) {
        y[i] = x.u(i);
        y[3 + i] = m.phi(i, x.u, x.t) * sech * w(i);
    }
    y[2] = x.t;
    y[5] = c;
    return y;
}

Point state_point(const ConeModel& m, const State& y) {
    Eigen::VectorXd u(m.dim_u);
    for (int i = 0; i < m.dim_u; ++i) u(i) = y[i];
    return Point(u, y[2]);
}

double metric_miss(const ConeModel& m, const State& y, const Point& target) {
    double acc = (y[2] - target.t) * (y[2] - target.t);
    for (int i = 0; i < m.dim_u; ++i) {
        double d = (y[i] - target.u(i)) * m.phi(i, target.u, target.t);
        acc += d * d;
    }
    return std::sqrt(acc);
}

GeodesicPath record_path(const ConeModel& m, const Point& x, const Point& y, State st, double L, int n,
                         const std::string& method) {
    GeodesicPath path;
    path.method = method;
    path.start = x;
    path.end = y;
    path.total_length = L;
    Stepper stepper;
    GeodesicRhs rhs{m};
    double h = L / (n - 1);
    path.samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        path.samples.push_back({state_point(m, st), k * h, st[2], st[5]});
        if (k + 1 < n) stepper.do_step(rhs, st, k * h, h);
    }
    path.solver_residual = metric_miss(m, st, y);
    return path;
}

GeodesicPath vertical_path(const Point& x, const Point& y, int n) {
    GeodesicPath path;
    path.method = "vertical";
    path.start = x;
    path.end = y;
    double L = std::abs(y.t - x.t);
    path.total_length = L;
    double sg = y.t >= x.t ? 1.0 : -1.0;
    for (int k = 0; k < n; ++k) {
        double s = L * k / (n - 1);
        path.samples.push_back({Point(x.u, x.t + sg * s), s, x.t + sg * s, sg});
    }
    return path;
}

// Semicircle geodesic of the rate-r plane, with the leaf displacement along unit direction e.
GeodesicPath halfplane_path(double r, const Point& x, const Point& y, int n) {
    Eigen::VectorXd du = y.u - x.u;
    double w2 = du.norm();
    Eigen::VectorXd e = du / w2;
    double X1 = 0.0, X2 = r * w2;
    double Y1 = std::exp(-r * x.t), Y2 = std::exp(-r * y.t);
    double Xc = ((X2 * X2 + Y2 * Y2) - (X1 * X1 + Y1 * Y1)) / (2.0 * (X2 - X1));
    double R = std::hypot(X1 - Xc, Y1);
    double th1 = std::atan2(Y1, X1 - Xc), th2 = std::atan2(Y2, X2 - Xc);
    double sg1 = std::log(std::tan(0.5 * th1)), sg2 = std::log(std::tan(0.5 * th2));
    double sgn = sg2 >= sg1 ? 1.0 : -1.0;
    GeodesicPath path;
    path.method = "closed_form";
    path.start = x;
    path.end = y;
    path.total_length = halfplane_distance(r, Point(0.0, x.t), Point(w2, y.t));
    double L = path.total_length;
    for (int k = 0; k < n; ++k) {
        double s = L * k / (n - 1);
        double sg = sg1 + sgn * r * s;
        double th = 2.0 * std::atan(std::exp(sg));
        double X = Xc + R * std::cos(th), Y = R * std::sin(th);
        Point p(Eigen::VectorXd(x.u + (X / r) * e), -std::log(Y) / r);
        path.samples.push_back({p, s, p.t, -sgn * std::cos(th)});
    }
    path.samples.back().p = y;
    path.samples.back().b = y.t;
    path.solver_residual = 0.0;
    return path;
}

// ---- 1-D angle shooting with a monotone miss function (warped leaves)

struct Shot {
    bool reached = false;
    double miss = 0.0;
    double length = 0.0;
    State end{};
};

Shot shoot_to_u(const ConeModel& m, const Point& x, const Point& y, double theta, double ds, double Lmax) {
    GeodesicRhs rhs{m};
    Stepper stepper;
    double sgn = y.u(0) >= x.u(0) ? 1.0 : -1.0;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(1, sgn);
    State st = initial_state(m, x, std::tanh(theta), 1.0 / std::cosh(theta), w);
    double s = 0.0;
    Shot out;
    while (s < Lmax) {
        State prev = st;
        stepper.do_step(rhs, st, s, ds);
        if (sgn * (st[0] - y.u(0)) >= 0.0) {
            // Newton on the partial step length using du/ds = p / phi^2.
            double h = ds * (y.u(0) - prev[0]) / (st[0] - prev[0]);
            for (int it = 0; it < 8; ++it) {
                State trial = prev;
                stepper.do_step(rhs, trial, s, h);
                State d;
                rhs(trial, d, s + h);
                double f = trial[0] - y.u(0);
                if (std::abs(f) < 1e-15 * (1 + std::abs(y.u(0))) || d[0] == 0.0) {
                    st = trial;
                    break;
                }
                h = std::clamp(h - f / d[0], 0.0, ds);
                st = trial;
            }
            stepper.do_step(rhs, prev, s, h);
            out.reached = true;
            out.end = prev;
            out.length = s + h;
            out.miss = prev[2] - y.t;
            return out;
        }
        s += ds;
    }
    out.reached = false;
    out.miss = 1e6;
    out.length = Lmax;
    return out;
}

GeodesicPath warped_shooting(const ConeModel& m, const Point& x, const Point& y, const GeodesicOptions& opt) {
    // Upper bound on the length: descend/ascend to a common height then cross the leaf there.
    double Lmax = 4.0 * (std::abs(y.t - x.t) + 2.0 * std::log(2.0 + leaf_distance(m, x, Point(y.u, x.t))) + 10.0);
    double ds = 0.01;
    auto f = [&](double th) { return shoot_to_u(m, x, y, th, ds, Lmax).miss; };
    double lo = -4.0, hi = 4.0;
    double flo = f(lo), fhi = f(hi);
    while (flo > 0.0 && lo > -40.0) lo *= 2.0, flo = f(lo);
    while (fhi < 0.0 && hi < 40.0) hi *= 2.0, fhi = f(hi);
    if (flo > 0.0 || fhi < 0.0) throw SolverError("geodesic_connect: could not bracket the shooting angle", std::min(std::abs(flo), std::abs(fhi)));
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(opt.max_iter);
    auto tol = [&](double a, double b) { return std::abs(b - a) <= 1e-14 * std::max(1.0, std::abs(a)); };
    std::pair<double, double> br = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    double theta = 0.5 * (br.first + br.second);
    Shot best = shoot_to_u(m, x, y, theta, ds, Lmax);
    if (!best.reached || std::abs(best.miss) > std::max(opt.tol, 1e-6) * 1e3) {
        throw SolverError("geodesic_connect: shooting did not converge", std::abs(best.miss));
    }
    double sgn = y.u(0) >= x.u(0) ? 1.0 : -1.0;
    Eigen::VectorXd w = Eigen::VectorXd::Constant(1, sgn);
    State st = initial_state(m, x, std::tanh(theta), 1.0 / std::cosh(theta), w);
    GeodesicPath path = record_path(m, x, y, st, best.length, std::max(opt.n_samples, 65), "shooting_bisection");
    return path;
}

// ---- Newton shooting for multi-axis diagonal leaves, continued from equal rates

struct NewtonShot {
    double theta, psi, L;
};

State shoot_fixed(const ConeModel& m, const Point& x, const NewtonShot& v, int steps) {
    GeodesicRhs rhs{m};
    Stepper stepper;
    Eigen::VectorXd w(m.dim_u);
    w(0) = std::cos(v.psi);
    if (m.dim_u > 1) w(1) = std::sin(v.psi);
    State st = initial_state(m, x, std::tanh(v.theta), 1.0 / std::cosh(v.theta), w);
    double h = v.L / steps;
    for (int k = 0; k < steps; ++k) stepper.do_step(rhs, st, k * h, h);
    return st;
}

Eigen::Vector3d newton_residual(const ConeModel& m, const Point& x, const Point& y, const NewtonShot& v, int steps) {
    State st = shoot_fixed(m, x, v, steps);
    Eigen::Vector3d F;
    for (int i = 0; i < 2; ++i) F(i) = (st[i] - y.u(i)) * m.phi(i, y.u, y.t);
    F(2) = st[2] - y.t;
    return F;
}

bool newton_solve(const ConeModel& m, const Point& x, const Point& y, NewtonShot& v, int steps, double tol, int max_iter,
                  double& residual) {
    Eigen::Vector3d F = newton_residual(m, x, y, v, steps);
    residual = F.norm();
    for (int it = 0; it < max_iter && residual > tol; ++it) {
        Eigen::Matrix3d J;
        const double hs[3] = {1e-7, 1e-7, 1e-7 * std::max(1.0, v.L)};
        for (int k = 0; k < 3; ++k) {
            NewtonShot w = v;
            if (k == 0) w.theta += hs[k];
            if (k == 1) w.psi += hs[k];
            if (k == 2) w.L += hs[k];
            J.col(k) = (newton_residual(m, x, y, w, steps) - F) / hs[k];
        }
        Eigen::Vector3d dv = J.fullPivLu().solve(-F);
        if (!dv.allFinite()) return false;
        double lam = 1.0;
        bool improved = false;
        for (int bt = 0; bt < 30; ++bt) {
            NewtonShot w{v.theta + lam * dv(0), v.psi + lam * dv(1), v.L + lam * dv(2)};
            if (w.L > 0.0) {
                Eigen::Vector3d Fw = newton_residual(m, x, y, w, steps);
                if (Fw.allFinite() && Fw.norm() < residual) {
                    v = w;
                    F = Fw;
                    residual = Fw.norm();
                    improved = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if (!improved) return residual <= tol;
    }
    return residual <= tol;
}

GeodesicPath diagonal_shooting(const ConeModel& model, const Point& x0, const Point& y0, const GeodesicOptions& opt) {
    // Homogeneity: move x to the origin by a leaf translation and a flow-compatible dilation.
    Point x(Eigen::VectorXd::Zero(model.dim_u), 0.0);
    Eigen::VectorXd du(model.dim_u);
    for (int i = 0; i < model.dim_u; ++i) du(i) = std::exp(model.rates[i] * x0.t) * (y0.u(i) - x0.u(i));
    Point y(du, y0.t - x0.t);

    double rbar = std::accumulate(model.rates.begin(), model.rates.end(), 0.0) / model.dim_u;
    GeodesicPath seed = halfplane_path(rbar, x, y, 3);
    NewtonShot v;
    double c0 = std::clamp(seed.samples.front().b_prime, -1.0 + 1e-15, 1.0 - 1e-15);
    v.theta = std::atanh(c0);
    v.psi = std::atan2(du(1), du(0));
    v.L = seed.total_length;

    double tol = std::max(opt.tol, 1e-12);
    double residual = INFINITY;
    bool ok = false;
    for (int K = 1; K <= 64 && !ok; K *= 2) {
        NewtonShot w = v;
        bool chain = true;
        for (int k = 1; k <= K && chain; ++k) {
            ConeModel mk = model;
            for (int i = 0; i < model.dim_u; ++i) mk.rates[i] = rbar + (model.rates[i] - rbar) * k / K;
            int steps = std::clamp(static_cast<int>(w.L / 0.01), 400, 6000);
            double tk = k == K ? tol : std::max(tol, 1e-6);
            chain = newton_solve(mk, x, y, w, steps, tk, opt.max_iter, residual);
        }
        if (chain) {
            v = w;
            ok = true;
        }
    }
    if (!ok) throw SolverError("geodesic_connect: Newton shooting did not converge", residual);

    int steps = std::clamp(static_cast<int>(v.L / 0.01), 400, 6000);
    // Sample count: a multiple of the fixed step count keeps the recorded path on the solved trajectory.
    int per = std::max(1, steps / std::max(opt.n_samples - 1, 1));
    int n_steps = per * std::max(opt.n_samples - 1, 1);
    NewtonShot vv = v;
    if (n_steps != steps) {
        double r2 = residual;
        newton_solve(model, x, y, vv, n_steps, tol, opt.max_iter, r2);
    }
    Eigen::VectorXd w(model.dim_u);
    w(0) = std::cos(vv.psi);
    w(1) = std::sin(vv.psi);
    State st = initial_state(model, x, std::tanh(vv.theta), 1.0 / std::cosh(vv.theta), w);
    GeodesicRhs rhs{model};
    Stepper stepper;
    double h = vv.L / n_steps;
    GeodesicPath path;
    path.method = "shooting_newton";
    path.start = x0;
    path.end = y0;
    path.total_length = vv.L;
    for (int k = 0; k <= n_steps; ++k) {
        if (k % per == 0) {
            Eigen::VectorXd u(model.dim_u);
            for (int i = 0; i < model.dim_u; ++i) u(i) = x0.u(i) + std::exp(-model.rates[i] * x0.t) * st[i];
            path.samples.push_back({Point(u, st[2] + x0.t), k * h, st[2] + x0.t, st[5]});
        }
        if (k < n_steps) stepper.do_step(rhs, st, k * h, h);
    }
    path.solver_residual = metric_miss(model, st, y);
    return path;
}

GeodesicPath reversed(GeodesicPath p) {
    std::reverse(p.samples.begin(), p.samples.end());
    for (auto& q : p.samples) {
        q.s = p.total_length - q.s;
        q.b_prime = -q.b_prime;
    }
    std::swap(p.start, p.end);
    p.method += "_reversed";
    return p;
}

}  // namespace

GeodesicPath geodesic_connect(const ConeModel& model, const Point& x, const Point& y, const GeodesicOptions& opt) {
    if (x.dim() != model.dim_u || y.dim() != model.dim_u) fail(ErrorKind::InvalidArgument, "point dimension mismatch");
    if (same_point(x, y)) fail(ErrorKind::InvalidArgument, "geodesic_connect: x == y");
    int n = std::max(opt.n_samples, 3);
    if ((y.u - x.u).norm() == 0.0) return vertical_path(x, y, n);
    if (model.separable() && model.equal_rates()) return halfplane_path(model.rates[0], x, y, n);
    if (model.dim_u == 1) {
        try {
            return warped_shooting(model, x, y, opt);
        } catch (const SolverError&) {
            // near-vertical pairs can be ill-conditioned from the low end only
            return reversed(warped_shooting(model, y, x, opt));
        }
    }
    if (model.kind == ModelKind::Diagonal && model.dim_u == 2) return diagonal_shooting(model, x, y, opt);
    fail(ErrorKind::Unsupported, "geodesic_connect: unsupported model/dimension");
}

double distance(const ConeModel& model, const Point& x, const Point& y, double tol) {
    if (same_point(x, y)) return 0.0;
    if ((y.u - x.u).norm() == 0.0) return std::abs(y.t - x.t);
    if (model.separable() && model.equal_rates()) {
        if (model.dim_u == 1) return halfplane_distance(model.rates[0], x, y);
        return halfplane_distance(model.rates[0], Point(0.0, x.t), Point((y.u - x.u).norm(), y.t));
    }
    GeodesicOptions opt;
    opt.tol = tol;
    opt.n_samples = 3;
    return geodesic_connect(model, x, y, opt).total_length;
}

double leaf_distance(const ConeModel& model, const Point& x, const Point& y) {
    if (std::abs(x.t - y.t) > 1e-12 * (1.0 + std::abs(x.t))) fail(ErrorKind::InvalidArgument, "leaf_distance: points on different leaves");
    if (model.separable()) {
        double acc = 0.0;
        for (int i = 0; i < model.dim_u; ++i) {
            double d = std::exp(model.rates[i] * x.t) * (y.u(i) - x.u(i));
            acc += d * d;
        }
        return std::sqrt(acc);
    }
    Eigen::VectorXd du = y.u - x.u;
    auto f = [&](double tau) {
        Eigen::VectorXd u = x.u + tau * du;
        double acc = 0.0;
        for (int i = 0; i < model.dim_u; ++i) {
            double d = model.phi(i, u, x.t) * du(i);
            acc += d * d;
        }
        return std::sqrt(acc);
    };
    int pieces = std::max(1, static_cast<int>(std::ceil(du.norm() * model.frequency)));
    double total = 0.0;
    for (int k = 0; k < pieces; ++k) {
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, double(k) / pieces, double(k + 1) / pieces, 10, 1e-13);
    }
    return total;
}

Point project(const ConeModel& /*model*/, const Point& x, const Point& y) { return Point(y.u, x.t); }

namespace {

double chord_length(const ConeModel& m, const Point& p, const Point& q, double weight_a = 0.0) {
    Eigen::VectorXd du = q.u - p.u;
    double dt = q.t - p.t;
    auto f = [&](double tau) {
        Eigen::VectorXd u = p.u + tau * du;
        double t = p.t + tau * dt;
        double acc = dt * dt;
        for (int i = 0; i < m.dim_u; ++i) {
            double d = m.phi(i, u, t) * du(i);
            acc += d * d;
        }
        double w = weight_a > 0.0 ? std::exp(-weight_a * t) : 1.0;
        return w * std::sqrt(acc);
    };
    return boost::math::quadrature::gauss<double, 3>::integrate(f, 0.0, 1.0);
}

}  // namespace

double path_length(const ConeModel& model, const GeodesicPath& path) {
    double L = 0.0;
    for (std::size_t k = 1; k < path.samples.size(); ++k) L += chord_length(model, path.samples[k - 1].p, path.samples[k].p);
    return L;
}

double projected_leaf_length(const ConeModel& model, const GeodesicPath& path) {
    double L = 0.0;
    double t0 = path.samples.front().p.t;
    for (std::size_t k = 1; k < path.samples.size(); ++k) {
        Point a(path.samples[k - 1].p.u, t0), b(path.samples[k].p.u, t0);
        L += leaf_distance(model, a, b);
    }
    return L;
}

HeightProfile height_profile(const GeodesicPath& path, double a, double tol_fd) {
    const auto& S = path.samples;
    if (S.size() < 64) fail(ErrorKind::InvalidArgument, "height_profile: need at least 64 samples");
    HeightProfile hp;
    hp.a = a;
    hp.tol_fd = tol_fd;
    hp.min_margin_quadratic = INFINITY;
    hp.min_margin_sqrt = INFINITY;
    for (std::size_t k = 1; k + 1 < S.size(); ++k) {
        double h1 = S[k].s - S[k - 1].s, h2 = S[k + 1].s - S[k].s;
        double b0 = S[k - 1].b, b1 = S[k].b, b2 = S[k + 1].b;
        // non-uniform three-point stencils
        double d1 = (b2 - b1) / h2 * h1 / (h1 + h2) + (b1 - b0) / h1 * h2 / (h1 + h2);
        double d2 = 2.0 * ((b2 - b1) / h2 - (b1 - b0) / h1) / (h1 + h2);
        double bp = std::clamp(d1, -1.0, 1.0);
        ProfileRow r;
        r.s = S[k].s;
        r.b = b1;
        r.b1 = d1;
        r.b2 = d2;
        r.margin_quadratic = d2 - a * (1.0 - bp * bp);
        r.margin_sqrt = d2 - a * std::sqrt(1.0 - bp * bp);
        if (r.margin_quadratic < -tol_fd) ++hp.violations_quadratic;
        if (r.margin_sqrt < -tol_fd) ++hp.violations_sqrt;
        hp.min_margin_quadratic = std::min(hp.min_margin_quadratic, r.margin_quadratic);
        hp.min_margin_sqrt = std::min(hp.min_margin_sqrt, r.margin_sqrt);
        hp.rows.push_back(r);
    }
    return hp;
}

double busemann_check(const ConeModel& model, const Point& ray_start, const Point& x, double horizon) {
    if (horizon < 10.0) fail(ErrorKind::InvalidArgument, "busemann_check: horizon must be >= 10");
    double worst = 0.0;
    double target = x.t - ray_start.t;
    for (int n = 1; n <= static_cast<int>(horizon); ++n) {
        Point g(ray_start.u, ray_start.t - n);
        double d = distance(model, g, x);
        worst = std::max(worst, std::abs((d - n) - target));
    }
    return worst;
}

MeshResult mesh_distance(const ConeModel& model, const Point& x, const Point& y, MeshOptions opt) {
    if (model.dim_u != 1) fail(ErrorKind::Unsupported, "mesh_distance: only 1-D leaves");
    if (opt.u_lo == opt.u_hi) {
        double ulo = std::min(x.u(0), y.u(0)), uhi = std::max(x.u(0), y.u(0));
        double tlo = std::min(x.t, y.t), thi = std::max(x.t, y.t);
        double w = std::max(uhi - ulo, thi - tlo);
        opt.u_lo = ulo - opt.margin * w - 0.5;
        opt.u_hi = uhi + opt.margin * w + 0.5;
        opt.t_lo = tlo - std::max(2.0, w);
        opt.t_hi = thi + opt.margin * w + 0.5;
    }
    // Grid spacing chosen so that both endpoints are nodes.
    auto spacing = [&](double lo, double hi, double d) {
        double h0 = (hi - lo) / (opt.n - 1);
        if (std::abs(d) < 1e-14) return h0;
        double k = std::max(1.0, std::round(std::abs(d) / h0));
        return std::abs(d) / k;
    };
    double hu = spacing(opt.u_lo, opt.u_hi, y.u(0) - x.u(0));
    double ht = spacing(opt.t_lo, opt.t_hi, y.t - x.t);
    int iu0 = -static_cast<int>(std::ceil((x.u(0) - opt.u_lo) / hu));
    int iu1 = static_cast<int>(std::ceil((opt.u_hi - x.u(0)) / hu));
    int it0 = -static_cast<int>(std::ceil((x.t - opt.t_lo) / ht));
    int it1 = static_cast<int>(std::ceil((opt.t_hi - x.t) / ht));
    int nu = iu1 - iu0 + 1, nt = it1 - it0 + 1;
    auto node_u = [&](int i) { return x.u(0) + (i + iu0) * hu; };
    auto node_t = [&](int j) { return x.t + (j + it0) * ht; };
    int src = (-iu0) * nt + (-it0);
    int tu = static_cast<int>(std::lround((y.u(0) - x.u(0)) / hu)) - iu0;
    int tt = static_cast<int>(std::lround((y.t - x.t) / ht)) - it0;
    int dst = tu * nt + tt;

    std::vector<std::pair<int, int>> stencil;
    for (int di = -opt.radius; di <= opt.radius; ++di) {
        for (int dj = -opt.radius; dj <= opt.radius; ++dj) {
            if ((di || dj) && std::gcd(std::abs(di), std::abs(dj)) == 1) stencil.emplace_back(di, dj);
        }
    }
    std::vector<double> dist(static_cast<std::size_t>(nu) * nt, INFINITY);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [d, id] = pq.top();
        pq.pop();
        if (d > dist[id]) continue;
        if (id == dst) break;
        int i = id / nt, j = id % nt;
        Point p(node_u(i), node_t(j));
        for (auto [di, dj] : stencil) {
            int a = i + di, b = j + dj;
            if (a < 0 || a >= nu || b < 0 || b >= nt) continue;
            int nid = a * nt + b;
            double cand = d + chord_length(model, p, Point(node_u(a), node_t(b)), opt.weight_a);
            if (cand < dist[nid]) {
                dist[nid] = cand;
                pq.push({cand, nid});
            }
        }
    }
    MeshResult r;
    r.length = dist[dst];
    r.nodes = nu * nt;
    r.hu = hu;
    r.ht = ht;
    return r;
}

std::string path_to_csv(const GeodesicPath& path) {
    std::ostringstream os;
    os.precision(17);
    int n = path.samples.empty() ? 0 : path.samples.front().p.dim();
    os << "s";
    for (int i = 0; i < n; ++i) os << ",u" << i;
    os << ",t,b,b_prime\n";
    for (const auto& s : path.samples) {
        os << s.s;
        for (int i = 0; i < n; ++i) os << ',' << s.p.u(i);
        os << ',' << s.p.t << ',' << s.b << ',' << s.b_prime << '\n';
    }
    return os.str();
}

}  // namespace cone_lab
