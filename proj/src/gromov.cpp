#include "cone_lab/gromov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "cone_lab/geometry.hpp"
#include "cone_lab/hamenstadt.hpp"

namespace cone_lab {

double gromov_product_b(const ConeModel& model, const Point& x, const Point& y) {
    return 0.5 * (x.t + y.t - distance(model, x, y));
}

double gromov_product_p(const ConeModel& model, const Point& x, const Point& y, const Point& p) {
    return 0.5 * (distance(model, x, p) + distance(model, y, p) - distance(model, x, y));
}

double triple_defect(double p, double q, double r) {
    if (std::isnan(p) || std::isnan(q) || std::isnan(r)) return NAN;
    double v[3] = {p, q, r};
    std::sort(v, v + 3);
    return v[1] - v[0];
}

Point sample_point(const ConeModel& model, const SampleBox& box, std::uint64_t& state) {
    std::mt19937_64 rng(state);
    state = rng();
    std::uniform_real_distribution<double> U(-box.u_half, box.u_half), T(box.t_lo, box.t_hi);
    Eigen::VectorXd u(model.dim_u);
    for (int i = 0; i < model.dim_u; ++i) u(i) = U(rng);
    return Point(u, T(rng));
}

namespace {

struct Pool {
    std::vector<Point> pts;
    Eigen::MatrixXd d;
    int failures = 0;

    double prod_b(int i, int j) const { return 0.5 * (pts[i].t + pts[j].t - d(i, j)); }
    double prod_p(int i, int j, int p) const { return 0.5 * (d(i, p) + d(j, p) - d(i, j)); }
};

Pool build_pool(const ConeModel& model, const SampleBox& box, int m, std::uint64_t seed) {
    Pool pool;
    std::uint64_t st = seed;
    pool.pts.reserve(m);
    for (int i = 0; i < m; ++i) pool.pts.push_back(sample_point(model, box, st));
    pool.d = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            double v = NAN;
            try {
                v = distance(model, pool.pts[i], pool.pts[j]);
            } catch (const SolverError&) {
                ++pool.failures;
            }
            pool.d(i, j) = pool.d(j, i) = v;
        }
    }
    return pool;
}

std::array<int, 4> distinct(std::mt19937_64& rng, int m, int k) {
    std::uniform_int_distribution<int> I(0, m - 1);
    std::array<int, 4> out{0, 0, 0, 0};
    for (int a = 0; a < k; ++a) {
        for (;;) {
            int c = I(rng);
            if (std::find(out.begin(), out.begin() + a, c) == out.begin() + a) {
                out[a] = c;
                break;
            }
        }
    }
    return out;
}

}  // namespace

DeltaReport delta_estimate(const ConeModel& model, const SampleBox& box, int n, std::uint64_t seed) {
    if (n < 100) fail(ErrorKind::InvalidArgument, "delta_estimate: n >= 100 required");
    DeltaReport rep;
    int m = static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(n)))) + 4;
    Pool pool = build_pool(model, box, m, seed);
    rep.pool = m;
    rep.failures = pool.failures;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    int next_mark = 100;
    for (int k = 0; k < n; ++k) {
        // draws come from a growing prefix of the pool, so a run with n samples is a prefix of any longer run
        int mk = std::min(m, static_cast<int>(std::ceil(2.0 * std::sqrt(k + 1.0))) + 4);
        auto q = distinct(rng, mk, 4);
        int x = q[0], y = q[1], z = q[2], w = q[3];
        double db = triple_defect(pool.prod_b(x, y), pool.prod_b(y, z), pool.prod_b(x, z));
        // four-point condition with basepoint w
        double d4 = triple_defect(pool.prod_p(x, y, w), pool.prod_p(y, z, w), pool.prod_p(x, z, w));
        if (std::isfinite(db)) rep.delta_b = std::max(rep.delta_b, db);
        if (std::isfinite(d4)) rep.delta_4pt = std::max(rep.delta_4pt, d4);

        // cross-difference triples of Q = (x,y,z,w), based at b and at o = fifth pool point
        int o = distinct(rng, mk, 1)[0];
        while (o == x || o == y || o == z || o == w) o = (o + 1) % mk;
        double ab = triple_defect(pool.prod_b(x, y) + pool.prod_b(z, w), pool.prod_b(x, z) + pool.prod_b(y, w),
                                  pool.prod_b(x, w) + pool.prod_b(y, z));
        double ao = triple_defect(pool.prod_p(x, y, o) + pool.prod_p(z, w, o), pool.prod_p(x, z, o) + pool.prod_p(y, w, o),
                                  pool.prod_p(x, w, o) + pool.prod_p(y, z, o));
        if (std::isfinite(ab) && std::isfinite(ao)) {
            rep.cross_defect = std::max(rep.cross_defect, ab);
            rep.cross_identity_error = std::max(rep.cross_identity_error, std::abs(ab - ao));
        }
        ++rep.n_samples;
        if (rep.n_samples == next_mark || k + 1 == n) {
            rep.refinement_history.emplace_back(rep.n_samples, rep.delta_b);
            next_mark *= 2;
        }
    }
    // the 2 delta bound of the tetrahedron inequality, with delta the measured b-based defect
    rep.cross_within_2delta = rep.cross_defect <= 2.0 * rep.delta_b + 1e-9 * (1.0 + rep.delta_b);
    return rep;
}

nlohmann::json to_json(const DeltaReport& r) {
    nlohmann::json j;
    j["delta_b"] = r.delta_b;
    j["delta_4pt"] = r.delta_4pt;
    j["cross_defect"] = r.cross_defect;
    j["cross_identity_error"] = r.cross_identity_error;
    j["cross_within_2delta"] = r.cross_within_2delta;
    j["n_samples"] = r.n_samples;
    j["pool"] = r.pool;
    j["failures"] = r.failures;
    j["refinement_history"] = nlohmann::json::array();
    for (auto [n, d] : r.refinement_history) j["refinement_history"].push_back({{"n", n}, {"delta_b", d}});
    return j;
}

MinHeightReport min_height_check(const ConeModel& model, const Point& x, const Point& y) {
    MinHeightReport rep;
    GeodesicOptions opt;
    opt.n_samples = 129;
    GeodesicPath path = geodesic_connect(model, x, y, opt);
    rep.b_min = path.b_min();
    rep.product = 0.5 * (x.t + y.t - path.total_length);
    rep.discrepancy = std::abs(rep.b_min - rep.product);
    for (const auto& s : path.samples) {
        if (s.b_prime > 0.0) break;
        rep.segment_error = std::max(rep.segment_error, std::abs(s.s - (x.t - s.b)));
    }
    return rep;
}

double visual_metric_check(const ConeModel& model, const Point& x, const Point& y, const Point& z) {
    double dyz = distance(model, y, z);
    if (dyz < 1.0) fail(ErrorKind::InvalidArgument, "visual_metric_check: d(y,z) < 1");
    double prod = 0.5 * (y.t + z.t - dyz);
    double r = rho(model, project(model, x, y), project(model, x, z)).value;
    return std::exp(-model.a * prod) / (std::exp(-model.a * x.t) * r);
}

std::vector<double> visual_metric_rays(const ConeModel& model, const Point& x, const Eigen::VectorXd& uy,
                                       const Eigen::VectorXd& uz, const std::vector<double>& heights) {
    std::vector<double> out;
    for (double h : heights) out.push_back(visual_metric_check(model, x, Point(uy, h), Point(uz, h)));
    return out;
}

}  // namespace cone_lab
