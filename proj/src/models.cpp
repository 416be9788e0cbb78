#include "cone_lab/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace cone_lab {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::HalfPlane: return "HalfPlane";
        case ModelKind::Diagonal: return "Diagonal";
        case ModelKind::Warped: return "Warped";
        case ModelKind::SuspensionCover: return "SuspensionCover";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    std::string k;
    for (char c : s) k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (k == "halfplane" || k == "half_plane") return ModelKind::HalfPlane;
    if (k == "diagonal") return ModelKind::Diagonal;
    if (k == "warped") return ModelKind::Warped;
    if (k == "suspensioncover" || k == "suspension" || k == "suspension_cover") return ModelKind::SuspensionCover;
    fail(ErrorKind::Config, "unknown model kind: " + s);
}

bool same_point(const Point& x, const Point& y, double tol) {
    if (x.dim() != y.dim()) return false;
    return std::abs(x.t - y.t) <= tol && (x.u - y.u).cwiseAbs().maxCoeff() <= tol;
}

namespace {

// Odd extension of 1 - e^{-t}; C^1 across t = 0.
double warp_g(double t) { return t >= 0 ? 1.0 - std::exp(-t) : std::exp(t) - 1.0; }
double warp_g1(double t) { return std::exp(-std::abs(t)); }
double warp_g2(double t) { return t >= 0 ? -std::exp(-t) : std::exp(t); }

}  // namespace

double ConeModel::phi(int i, const Eigen::VectorXd& u, double t) const {
    if (kind == ModelKind::Warped) {
        return std::exp(base_rate * t + epsilon * std::sin(frequency * u(0)) * warp_g(t));
    }
    return std::exp(rates[i] * t);
}

double ConeModel::log_rate(int i, const Eigen::VectorXd& u, double t) const {
    if (kind == ModelKind::Warped) {
        return base_rate + epsilon * std::sin(frequency * u(0)) * warp_g1(t);
    }
    return rates[i];
}

double ConeModel::dphi_dt(int i, const Eigen::VectorXd& u, double t) const {
    return phi(i, u, t) * log_rate(i, u, t);
}

double ConeModel::dphi_du(int i, int j, const Eigen::VectorXd& u, double t) const {
    if (kind != ModelKind::Warped || j != 0) return 0.0;
    return phi(i, u, t) * epsilon * frequency * std::cos(frequency * u(0)) * warp_g(t);
}

double ConeModel::d2phi_dt2(int i, const Eigen::VectorXd& u, double t) const {
    double r = log_rate(i, u, t);
    double extra = 0.0;
    if (kind == ModelKind::Warped) extra = epsilon * std::sin(frequency * u(0)) * warp_g2(t);
    return phi(i, u, t) * (r * r + extra);
}

double ConeModel::d2phi_dudt(int i, int j, const Eigen::VectorXd& u, double t) const {
    if (kind != ModelKind::Warped || j != 0) return 0.0;
    double c = epsilon * frequency * std::cos(frequency * u(0));
    return phi(i, u, t) * (c * warp_g(t) * log_rate(i, u, t) + c * warp_g1(t));
}

double ConeModel::d2phi_du2(int i, int j, int k, const Eigen::VectorXd& u, double t) const {
    if (kind != ModelKind::Warped || j != 0 || k != 0) return 0.0;
    double w = frequency * u(0);
    double first = epsilon * frequency * std::cos(w) * warp_g(t);
    double second = -epsilon * frequency * frequency * std::sin(w) * warp_g(t);
    return phi(i, u, t) * (first * first + second);
}

double ConeModel::volume_density(const Eigen::VectorXd& u, double t) const {
    double v = 1.0;
    for (int i = 0; i < dim_u; ++i) v *= phi(i, u, t);
    return v;
}

bool ConeModel::equal_rates() const {
    if (kind == ModelKind::Warped) return epsilon == 0.0;
    return std::all_of(rates.begin(), rates.end(), [&](double r) { return r == rates.front(); });
}

bool ConeModel::is_halfplane_like() const { return dim_u == 1 && separable(); }

double ConeModel::nominal_entropy() const {
    if (kind == ModelKind::Warped) return base_rate;
    double h = 0.0;
    for (double r : rates) h += r;
    return h;
}

ConeModel make_halfplane(double a) {
    if (!(a > 0.0) || !std::isfinite(a)) fail(ErrorKind::InvalidModel, "halfplane requires a > 0");
    ConeModel m;
    m.kind = ModelKind::HalfPlane;
    m.dim_u = 1;
    m.a = m.A = a;
    m.rates = {a};
    m.label = "halfplane(a=" + std::to_string(a) + ")";
    return m;
}

ConeModel make_diagonal(const std::vector<double>& rates) {
    if (rates.empty()) fail(ErrorKind::InvalidModel, "diagonal model needs at least one rate");
    for (double r : rates) {
        if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::InvalidModel, "diagonal rates must be > 0");
    }
    ConeModel m;
    m.kind = ModelKind::Diagonal;
    m.dim_u = static_cast<int>(rates.size());
    m.rates = rates;
    m.a = *std::min_element(rates.begin(), rates.end());
    m.A = *std::max_element(rates.begin(), rates.end());
    m.label = "diagonal(";
    for (std::size_t i = 0; i < rates.size(); ++i) m.label += (i ? "," : "") + std::to_string(rates[i]);
    m.label += ")";
    return m;
}

RateCheck check_rates(const ConeModel& model, const RateGrid& grid, double tol) {
    RateCheck rc;
    rc.min_rate = INFINITY;
    rc.max_rate = -INFINITY;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(model.dim_u);
    double h = (grid.hi - grid.lo) / (grid.n - 1);
    for (int i = 0; i < model.dim_u; ++i) {
        for (int iu = 0; iu < grid.n; ++iu) {
            u.setConstant(grid.lo + iu * h);
            for (int it = 0; it < grid.n; ++it) {
                double r = model.log_rate(i, u, grid.lo + it * h);
                rc.min_rate = std::min(rc.min_rate, r);
                rc.max_rate = std::max(rc.max_rate, r);
            }
        }
    }
    rc.ok = rc.min_rate >= model.a - tol && rc.max_rate <= model.A + tol && rc.min_rate > 0.0;
    return rc;
}

namespace {

// Grid extremum of the warped rate, refined twice on a 41x41 patch around the best cell.
double warped_rate_extremum(const ConeModel& m, const RateGrid& grid, bool want_max) {
    auto rate = [&](double u, double t) {
        Eigen::VectorXd uu(1);
        uu(0) = u;
        double r = m.log_rate(0, uu, t);
        return want_max ? r : -r;
    };
    double h = (grid.hi - grid.lo) / (grid.n - 1);
    double best = -INFINITY, bu = 0, bt = 0;
    for (int iu = 0; iu < grid.n; ++iu) {
        for (int it = 0; it < grid.n; ++it) {
            double u = grid.lo + iu * h, t = grid.lo + it * h;
            double r = rate(u, t);
            if (r > best) best = r, bu = u, bt = t;
        }
    }
    for (int pass = 0; pass < 2; ++pass) {
        double cu = bu, ct = bt, span = h;
        h = span / 20.0;
        for (int iu = -20; iu <= 20; ++iu) {
            for (int it = -20; it <= 20; ++it) {
                double u = std::clamp(cu + iu * h, grid.lo, grid.hi);
                double t = std::clamp(ct + it * h, grid.lo, grid.hi);
                double r = rate(u, t);
                if (r > best) best = r, bu = u, bt = t;
            }
        }
    }
    return want_max ? best : -best;
}

}  // namespace

ConeModel make_warped(double epsilon, double frequency, double base_rate, const RateGrid& grid) {
    if (!(epsilon >= 0.0) || !(frequency > 0.0) || !(base_rate > 0.0)) {
        fail(ErrorKind::InvalidModel, "warped model requires epsilon >= 0, frequency > 0, base_rate > 0");
    }
    ConeModel m;
    m.kind = ModelKind::Warped;
    m.dim_u = 1;
    m.epsilon = epsilon;
    m.frequency = frequency;
    m.base_rate = base_rate;
    m.rates = {base_rate};
    double lo = warped_rate_extremum(m, grid, false);
    double hi = warped_rate_extremum(m, grid, true);
    if (!(lo > 0.0)) {
        fail(ErrorKind::InvalidModel, "warped model violates the rate invariant: min d/dt log phi = " + std::to_string(lo));
    }
    m.a = lo;
    m.A = hi;
    m.label = "warped(eps=" + std::to_string(epsilon) + ",freq=" + std::to_string(frequency) +
              ",base=" + std::to_string(base_rate) + ")";
    return m;
}

Point flow(const ConeModel& /*model*/, const Point& x, double s) { return Point(x.u, x.t + s); }

double dflow_factor(const ConeModel& model, const Point& x, int axis, double s) {
    if (model.separable()) return std::exp(model.rates[axis] * s);
    return model.phi(axis, x.u, x.t + s) / model.phi(axis, x.u, x.t);
}

// ---------------------------------------------------------------- suspension

Eigen::Vector2d SuspensionModel::to_eigen(const Eigen::Vector2d& p) const {
    Eigen::Matrix2d B;
    B.col(0) = e_u;
    B.col(1) = e_s;
    return B.partialPivLu().solve(p);
}

Eigen::Vector2d SuspensionModel::from_eigen(const Eigen::Vector2d& c) const { return c(0) * e_u + c(1) * e_s; }

SPoint SuspensionModel::flow(const SPoint& x, double s) const { return {x.p, x.t + s}; }

namespace {

Eigen::Vector2d mod1(const Eigen::Vector2d& p) {
    return {p(0) - std::floor(p(0)), p(1) - std::floor(p(1))};
}

}  // namespace

SPoint SuspensionModel::reduce(const SPoint& x) const {
    double k = std::floor(x.t / period);
    SPoint r{mod1(x.p), x.t - k * period};
    Eigen::Matrix2d M = matrix.cast<double>();
    Eigen::Matrix2d Minv = M.inverse();
    long steps = static_cast<long>(k);
    for (long i = 0; i < std::labs(steps); ++i) r.p = mod1((steps > 0 ? M : Minv) * r.p);
    return r;
}

double SuspensionModel::torus_gap(const SPoint& x, const SPoint& y) const {
    SPoint a = reduce(x), b = reduce(y);
    auto wrap = [](double d) { return d - std::round(d); };
    double best = INFINITY;
    Eigen::Matrix2d M = matrix.cast<double>();
    for (int k = -1; k <= 1; ++k) {
        SPoint bb = b;
        if (k == 1) bb = {mod1(M.inverse() * b.p), b.t + period};
        if (k == -1) bb = {mod1(M * b.p), b.t - period};
        double g = std::hypot(wrap(a.p(0) - bb.p(0)), wrap(a.p(1) - bb.p(1)));
        best = std::min(best, std::hypot(g, a.t - bb.t));
    }
    return best;
}

Point SuspensionModel::cover_point(const SPoint& z) const { return Point(to_eigen(z.p)(0), z.t); }

SPoint SuspensionModel::along_unstable(const SPoint& x, double r) const { return {x.p + r * e_u, x.t}; }
SPoint SuspensionModel::along_stable(const SPoint& x, double r) const { return {x.p + r * e_s, x.t}; }

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace

SPoint SuspensionModel::holonomy_s(const SPoint& x, const SPoint& y, const SPoint& z) const {
    Eigen::Vector2d dy = to_eigen(y.p - x.p), dz = to_eigen(z.p - x.p);
    require(std::abs(y.t - x.t) < 1e-12 && std::abs(dy(0)) < 1e-9 * (1 + dy.norm()), "holonomy_s: y not on W^s(x)");
    require(std::abs(z.t - x.t) < 1e-12 && std::abs(dz(1)) < 1e-9 * (1 + dz.norm()), "holonomy_s: z not on W^u(x)");
    return {z.p + (y.p - x.p), y.t};
}

SPoint SuspensionModel::holonomy_cs(const SPoint& x, const SPoint& y, const SPoint& z) const {
    Eigen::Vector2d dy = to_eigen(y.p - x.p), dz = to_eigen(z.p - x.p);
    require(std::abs(dy(0)) < 1e-9 * (1 + dy.norm()), "holonomy_cs: y not on W^cs(x)");
    require(std::abs(z.t - x.t) < 1e-12 && std::abs(dz(1)) < 1e-9 * (1 + dz.norm()), "holonomy_cs: z not on W^u(x)");
    return {z.p + (y.p - x.p), z.t + (y.t - x.t)};
}

Point SuspensionModel::deck(const Point& q) const {
    return Point(lambda_u * q.u(0), q.t - period);
}

SuspensionModel make_suspension(const Eigen::Matrix2i& matrix) {
    int det = matrix(0, 0) * matrix(1, 1) - matrix(0, 1) * matrix(1, 0);
    if (std::abs(det) != 1) fail(ErrorKind::InvalidModel, "suspension matrix must be unimodular");
    double tr = matrix(0, 0) + matrix(1, 1);
    double disc = tr * tr - 4.0 * det;
    if (disc <= 0.0) fail(ErrorKind::InvalidModel, "suspension matrix is not hyperbolic");
    double l1 = 0.5 * (tr + std::sqrt(disc)), l2 = 0.5 * (tr - std::sqrt(disc));
    double lu = std::abs(l1) > std::abs(l2) ? l1 : l2;
    double ls = std::abs(l1) > std::abs(l2) ? l2 : l1;
    if (!(std::abs(lu) > 1.0 + 1e-12) || !(std::abs(ls) < 1.0 - 1e-12)) {
        fail(ErrorKind::InvalidModel, "suspension matrix is not hyperbolic");
    }
    SuspensionModel s;
    s.matrix = matrix;
    s.lambda = std::abs(lu);
    s.lambda_u = lu;
    Eigen::Matrix2d M = matrix.cast<double>();
    auto eigvec = [&](double l) {
        Eigen::Vector2d v;
        if (std::abs(M(0, 1)) > 1e-12) v = Eigen::Vector2d(M(0, 1), l - M(0, 0));
        else v = Eigen::Vector2d(l - M(1, 1), M(1, 0));
        return Eigen::Vector2d(v.normalized());
    };
    s.e_u = eigvec(lu);
    s.e_s = eigvec(ls);
    if (s.e_u(0) < 0) s.e_u = -s.e_u;
    if (s.e_s(1) < 0) s.e_s = -s.e_s;
    s.cover.kind = ModelKind::SuspensionCover;
    s.cover.dim_u = 1;
    s.cover.a = s.cover.A = std::log(s.lambda);
    s.cover.rates = {std::log(s.lambda)};
    s.cover.label = "suspension_cover";
    return s;
}

// ---------------------------------------------------------------- adapted metric

double AdaptedMetric::norm(const Eigen::VectorXd& v) const { return std::sqrt(v.dot(gram * v)); }

AdaptedMetric adapt_metric(double C, double a, double A, const Cocycle& cocycle, const AdaptOptions& opt) {
    if (!(C >= 1.0) || !(a > 0.0) || !(A >= a)) fail(ErrorKind::InvalidArgument, "adapt_metric needs C >= 1, 0 < a <= A");
    AdaptedMetric out;
    out.T = std::log(2.0 * C) / a;
    Eigen::MatrixXd M0 = cocycle(0.0);
    const int n = static_cast<int>(M0.rows());
    out.gram = Eigen::MatrixXd::Zero(n, n);
    using boost::math::quadrature::gauss_kronrod;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double err = 0.0;
            auto f = [&](double s) {
                Eigen::MatrixXd Ms = cocycle(s);
                return (Ms.transpose() * Ms)(i, j);
            };
            double v = gauss_kronrod<double, 61>::integrate(f, 0.0, out.T, 15, 1e-13, &err);
            if (!std::isfinite(v) || err > 1e-8 * std::max(1.0, std::abs(v))) {
                throw SolverError("adapt_metric: quadrature failure", err);
            }
            out.gram(i, j) = out.gram(j, i) = v;
        }
    }
    Eigen::MatrixXd MT = cocycle(out.T);
    Eigen::MatrixXd N = 0.5 * (MT.transpose() * MT - Eigen::MatrixXd::Identity(n, n));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(N, out.gram);
    out.a_star = ges.eigenvalues().minCoeff();
    out.A_star = ges.eigenvalues().maxCoeff();

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> us(0.0, opt.s_max);
    std::normal_distribution<double> nd;
    for (int k = 0; k < opt.samples; ++k) {
        double s = us(rng);
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = nd(rng);
        v.normalize();
        Eigen::VectorXd w = cocycle(s) * v;
        double raw = w.norm();
        double lo = std::exp(a * s) / C, hi = C * std::exp(A * s);
        out.raw_violation = std::max({out.raw_violation, lo / raw - 1.0, raw / hi - 1.0});
        double ratio = out.norm(w) / out.norm(v);
        double slo = std::exp(out.a_star * s), shi = std::exp(out.A_star * s);
        out.worst_ratio_violation = std::max({out.worst_ratio_violation, slo / ratio - 1.0, ratio / shi - 1.0});
    }
    out.samples = opt.samples;
    if (out.raw_violation > opt.tol) {
        fail(ErrorKind::InvalidArgument, "adapt_metric: cocycle violates the raw expansion constants");
    }
    if (out.worst_ratio_violation > opt.tol) {
        fail(ErrorKind::Verification, "adapt_metric: starred inequality fails on samples");
    }
    return out;
}

Cocycle shear_cocycle(double lambda) {
    return [lambda](double s) {
        Eigen::MatrixXd M(2, 2);
        double f = std::pow(lambda, s);
        M << f, f * s / lambda, 0.0, f;
        return M;
    };
}

Cocycle diagonal_cocycle(const std::vector<double>& rates) {
    return [rates](double s) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rates.size(), rates.size());
        for (std::size_t i = 0; i < rates.size(); ++i) M(i, i) = std::exp(rates[i] * s);
        return M;
    };
}

// ---------------------------------------------------------------- json

nlohmann::json model_to_json(const ConeModel& m) {
    nlohmann::json j;
    j["kind"] = to_string(m.kind);
    j["a"] = m.a;
    j["A"] = m.A;
    j["rates"] = m.rates;
    if (m.kind == ModelKind::Warped) {
        j["epsilon"] = m.epsilon;
        j["frequency"] = m.frequency;
        j["base_rate"] = m.base_rate;
    }
    return j;
}

ConeModel model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || !j.contains("kind")) fail(ErrorKind::Config, "model spec needs a 'kind' field");
        ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
        switch (kind) {
            case ModelKind::HalfPlane: return make_halfplane(j.value("a", 1.0));
            case ModelKind::Diagonal: return make_diagonal(j.at("rates").get<std::vector<double>>());
            case ModelKind::Warped: {
                double base = j.value("base_rate", 1.0);
                if (!j.contains("base_rate") && j.contains("rates") && !j["rates"].empty()) base = j["rates"][0].get<double>();
                return make_warped(j.value("epsilon", 0.0), j.value("frequency", 1.0), base);
            }
            case ModelKind::SuspensionCover: {
                Eigen::Matrix2i M;
                M << 2, 1, 1, 1;
                if (j.contains("matrix")) {
                    auto rows = j.at("matrix").get<std::vector<std::vector<int>>>();
                    if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2) {
                        fail(ErrorKind::Config, "matrix must be 2x2");
                    }
                    M << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
                }
                return make_suspension(M).cover;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("model spec: ") + e.what());
    }
    fail(ErrorKind::Config, "unreachable model kind");
}

}  // namespace cone_lab
