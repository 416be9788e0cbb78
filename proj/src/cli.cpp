#include "cone_lab/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "cone_lab/analysis.hpp"
#include "cone_lab/gromov.hpp"
#include "cone_lab/hamenstadt.hpp"

namespace cone_lab {

using nlohmann::json;

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
    ExperimentConfig c;
    try {
        if (!j.contains("model") || !j["model"].is_object()) fail(ErrorKind::Config, "config.model must be an object");
        if (!j.contains("op") || !j["op"].is_string()) fail(ErrorKind::Config, "config.op must be a string");
        c.model = j["model"];
        c.op = j["op"].get<std::string>();
        if (j.contains("params")) {
            if (!j["params"].is_object()) fail(ErrorKind::Config, "config.params must be an object");
            c.params = j["params"];
        }
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("workers")) c.workers = j["workers"].get<int>();
        if (j.contains("output")) c.output = j["output"].get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("config: ") + e.what());
    }
    if (c.workers < 1) fail(ErrorKind::Config, "config.workers must be >= 1");
    auto ops = known_ops();
    if (std::find(ops.begin(), ops.end(), c.op) == ops.end()) fail(ErrorKind::Config, "unknown op: " + c.op);
    if (const char* env = std::getenv("CONE_LAB_SEED")) {
        try {
            c.seed = std::stoull(env);
        } catch (const std::exception&) {
            fail(ErrorKind::Config, "CONE_LAB_SEED is not an unsigned integer");
        }
    }
    model_from_json(c.model);  // validates the model spec
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("malformed config JSON: ") + e.what());
    }
    return parse_config(j);
}

namespace {

Point point_param(const json& p, const std::string& key, const ConeModel& m, const Point& dflt) {
    if (!p.contains(key)) return dflt;
    auto v = p.at(key).get<std::vector<double>>();
    if (static_cast<int>(v.size()) != m.dim_u + 1) fail(ErrorKind::Config, "point '" + key + "' needs dim_u + 1 entries");
    Eigen::VectorXd u(m.dim_u);
    for (int i = 0; i < m.dim_u; ++i) u(i) = v[i];
    return Point(u, v.back());
}

Point origin(const ConeModel& m) { return Point(Eigen::VectorXd::Zero(m.dim_u), 0.0); }

Point unit_offset(const ConeModel& m) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m.dim_u);
    u(0) = 1.0;
    return Point(u, 0.0);
}

json prov(const std::string& method, double error) { return {{"method", method}, {"error", error}}; }

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

using OpFn = std::function<OpResult(const ConeModel&, const json&, const ExperimentConfig&)>;

const std::map<std::string, OpFn>& op_table() {
    static const std::map<std::string, OpFn> table = {
        {"distance",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             Point x = point_param(p, "x", m, origin(m)), y = point_param(p, "y", m, unit_offset(m));
             double d = distance(m, x, y);
             r.outputs = {{"d", d}};
             r.provenance["d"] = prov(has_exact_uniformization(m) ? "closed_form" : "quadrature", 1e-9);
             return r;
         }},
        {"geodesic",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             Point x = point_param(p, "x", m, origin(m)), y = point_param(p, "y", m, unit_offset(m));
             GeodesicOptions opt;
             opt.n_samples = p.value("n_samples", 257);
             opt.max_iter = p.value("max_iter", opt.max_iter);
             GeodesicPath path = geodesic_connect(m, x, y, opt);
             HeightProfile hp = height_profile(path, m.a, p.value("tol_fd", 1e-3));
             r.outputs = {{"length", path.total_length}, {"method", path.method}, {"residual", path.solver_residual},
                          {"b_min", path.b_min()}, {"violations_quadratic", hp.violations_quadratic},
                          {"violations_sqrt", hp.violations_sqrt}, {"min_margin_quadratic", hp.min_margin_quadratic},
                          {"min_margin_sqrt", hp.min_margin_sqrt}};
             r.provenance["length"] = prov(path.method, path.solver_residual);
             r.invariants_ok = hp.violations_quadratic == 0;
             return r;
         }},
        {"d_b",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             Point x = point_param(p, "x", m, origin(m)), y = point_param(p, "y", m, unit_offset(m));
             UniformizedDistance d = d_b(m, x, y, p.value("use_mesh", false));
             r.outputs = {{"value", d.value}, {"lower", d.lower}, {"upper", d.upper}, {"method", to_string(d.method)}};
             r.provenance["value"] = prov(to_string(d.method), d.upper - d.lower);
             r.invariants_ok = d.lower <= d.value * (1 + 1e-12) && d.value <= d.upper * (1 + 1e-12);
             return r;
         }},
        {"rho",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             Point x = point_param(p, "x", m, origin(m)), y = point_param(p, "y", m, unit_offset(m));
             RhoEvaluation e = rho(m, x, y);
             r.outputs = {{"value", e.value}, {"t_star", e.t_star}, {"iterations", e.iterations}};
             r.provenance["value"] = prov("bisection", e.tol * m.A * e.value);
             return r;
         }},
        {"delta_estimate",
         [](const ConeModel& m, const json& p, const ExperimentConfig& c) {
             OpResult r;
             SampleBox box;
             if (p.contains("box")) {
                 box.u_half = p["box"].value("u_half", box.u_half);
                 box.t_lo = p["box"].value("t_lo", box.t_lo);
                 box.t_hi = p["box"].value("t_hi", box.t_hi);
             }
             DeltaReport d = delta_estimate(m, box, p.value("n", 400), c.seed);
             r.outputs = to_json(d);
             r.provenance["delta_b"] = prov("sampled_maximum", 0.0);
             r.invariants_ok = std::isfinite(d.delta_b) && d.cross_within_2delta;
             return r;
         }},
        {"entropy_estimate",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             EntropyReport e = entropy_estimate(m, p.value("s_max", 8));
             r.outputs = to_json(e);
             r.provenance["h_est"] = prov("regression", 0.0);
             r.invariants_ok = e.monotone && e.submultiplicative && e.fekete;
             return r;
         }},
        {"separated_count",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             Point x = point_param(p, "x", m, origin(m));
             NetResult n = separated_count(m, x, p.value("s", 1.0), p.value("l", 0.0));
             r.outputs = {{"count", n.count}, {"separation", n.separation}, {"ball_radius", n.ball_radius},
                          {"completions", n.completions}};
             if (n.points_complete && n.points.size() <= 400) {
                 NetAudit au = audit_net(m, n);
                 r.outputs["audit"] = {{"separated", au.separated}, {"maximal", au.maximal},
                                       {"min_separation_ratio", au.min_separation_ratio}, {"max_gap_ratio", au.max_gap_ratio}};
                 r.invariants_ok = au.separated && au.maximal;
             }
             r.provenance["count"] = prov("exact_count", 0.0);
             return r;
         }},
        {"laplace_G",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             double h = p.contains("h_est") ? p["h_est"].get<double>() : entropy_estimate(m, 8).h_est;
             json rows = json::array();
             std::vector<double> sigmas = p.contains("sigmas") ? p["sigmas"].get<std::vector<double>>()
                                                               : std::vector<double>{p.value("sigma", h + 1.0)};
             for (double s : sigmas) {
                 LaplaceG g = laplace_G(m, s, p.value("s_max", 40.0), h, p.value("dt", 0.005));
                 rows.push_back({{"sigma", s}, {"G", g.value}, {"quad_error", g.quad_error}, {"tail_error", g.tail}});
             }
             r.outputs = {{"h_est", h}, {"rows", rows}};
             r.provenance["G"] = prov("step_quadrature", rows.back()["quad_error"].get<double>() + rows.back()["tail_error"].get<double>());
             return r;
         }},
        {"crit_ratio",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             double h = p.contains("h_est") ? p["h_est"].get<double>() : entropy_estimate(m, 8).h_est;
             Point x = point_param(p, "x", m, origin(m));
             CritReport c = crit_ratio(m, x, p.value("sigma", h + 1.0), h, p.value("s_max", 40.0));
             r.outputs = {{"ratio", c.ratio}, {"numerator", c.numerator}, {"G", c.G}, {"shifted_pos", c.shifted_pos},
                          {"shifted_neg", c.shifted_neg}};
             r.provenance["ratio"] = prov(m.separable() ? "closed_form/step_quadrature" : "quadrature", 0.0);
             return r;
         }},
        {"ps_renormalize",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             double h = volume_entropy(m);
             RenormalizedMeasure rm = ps_renormalize(m, origin(m), p.value("sigma", h + 0.25), p.value("l", 0.0), p.value("cells", 8));
             json cells = json::array();
             double sum = 0.0;
             for (const auto& c : rm.partition) {
                 cells.push_back({{"lo", vec_json(c.lo)}, {"hi", vec_json(c.hi)}, {"mass", c.mass}, {"error", c.error}, {"reliable", c.reliable}});
                 sum += c.mass;
             }
             json interior = json::object();
             for (const auto& [T, v] : rm.interior_below) interior[std::to_string(T)] = v;
             r.outputs = {{"sigma", rm.sigma}, {"l", rm.l}, {"total_mass", rm.total_mass}, {"cells", cells},
                          {"interior_mass_below_T", interior}, {"normalizer", rm.normalizer}};
             r.provenance["cells"] = prov(m.separable() ? "closed_form" : "quadrature", 0.0);
             if (!rm.partition.empty()) r.invariants_ok = std::abs(sum - rm.total_mass) <= 1e-6 * rm.total_mass;
             return r;
         }},
        {"ahlfors_check",
         [](const ConeModel& m, const json& p, const ExperimentConfig& c) {
             OpResult r;
             double h = volume_entropy(m);
             RenormalizedMeasure rm = ps_renormalize(m, origin(m), p.value("sigma", h + 0.125), p.value("l", 1.0), 0);
             AhlforsReport a = ahlfors_check(rm, p.value("radii", std::vector<double>{1.0, 0.5, 0.25, 0.125}), p.value("centers", 20), c.seed);
             r.outputs = {{"K", a.K}, {"exponent", a.exponent}, {"excluded", a.excluded}, {"center_spread", a.center_spread}};
             r.provenance["K"] = prov(m.separable() ? "closed_form" : "quadrature", 0.0);
             return r;
         }},
        {"margulis_checks",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             ChartBox box;
             box.u_lo = Eigen::VectorXd::Zero(m.dim_u);
             box.u_hi = Eigen::VectorXd::Ones(m.dim_u);
             if (p.contains("u_lo")) box.u_lo = Eigen::Map<const Eigen::VectorXd>(p["u_lo"].get<std::vector<double>>().data(), m.dim_u);
             if (p.contains("u_hi")) box.u_hi = Eigen::Map<const Eigen::VectorXd>(p["u_hi"].get<std::vector<double>>().data(), m.dim_u);
             box.t0 = p.value("t0", 0.0);
             box.t1 = p.value("t1", 1.0);
             MargulisReport mr = margulis_checks(m, box, p.value("t", 1.0));
             r.outputs = {{"mass", mr.mass}, {"mass_flipped", mr.mass_flipped}, {"image_mass", mr.image_mass},
                          {"scaling_error", mr.scaling_error}, {"flip_error", mr.flip_error},
                          {"nu_normalization", mr.nu_normalization}, {"h", mr.h}};
             r.provenance["mass"] = prov("quadrature", mr.flip_error);
             r.invariants_ok = mr.scaling_error <= 1e-3 && mr.flip_error <= 1e-6;
             return r;
         }},
        {"doubling_check",
         [](const ConeModel& m, const json& p, const ExperimentConfig& c) {
             OpResult r;
             double h = volume_entropy(m);
             DoublingReport d = doubling_check(m, p.value("sigma", h + 1.0), p.value("n_balls", 30),
                                               p.value("radii", std::vector<double>{0.25, 0.5, 1.0}), c.seed);
             r.outputs = to_json(d);
             r.provenance["worst_ratio"] = prov("quadrature", 1e-8);
             r.invariants_ok = std::isfinite(d.worst_ratio) && d.worst_ratio >= 1.0;
             return r;
         }},
        {"poincare_check",
         [](const ConeModel& m, const json& p, const ExperimentConfig& c) {
             OpResult r;
             double h = volume_entropy(m);
             PoincareReport pr = poincare_check(m, p.value("sigma", h + 1.0), standard_test_functions(m), p.value("n_balls", 12), c.seed);
             r.outputs = to_json(pr);
             r.provenance["worst_quotient"] = prov("quadrature", 0.1 * pr.worst_quotient);
             r.invariants_ok = std::isfinite(pr.worst_quotient);
             return r;
         }},
        {"critical_failure_demo",
         [](const ConeModel& m, const json& p, const ExperimentConfig&) {
             OpResult r;
             GrowthTable t = critical_failure_demo(m, Eigen::VectorXd::Zero(m.dim_u), p.value("r", 1.0),
                                                   p.value("sigma", volume_entropy(m)),
                                                   p.value("Ts", std::vector<double>{1.0, 2.0, 4.0, 8.0}));
             json rows = json::array();
             for (const auto& row : t.rows) rows.push_back({{"T", row.T}, {"mass", row.mass}, {"mass_over_T", row.mass_over_T}});
             r.outputs = {{"sigma", t.sigma}, {"rows", rows}, {"increasing", t.increasing}};
             r.provenance["rows"] = prov("quadrature", 1e-8);
             return r;
         }},
        {"cone_ball_inclusions",
         [](const ConeModel& m, const json& p, const ExperimentConfig& c) {
             OpResult r;
             InclusionReport ir = cone_ball_inclusions(m, point_param(p, "x", m, origin(m)), p.value("r", 1.0), p.value("L_cap", 4.0),
                                                       p.value("samples", 200), c.seed);
             r.outputs = to_json(ir);
             r.provenance["L_star"] = prov("sampled_bisection", 0.0);
             return r;
         }},
        {"holonomy_invariance",
         [](const ConeModel&, const json& p, const ExperimentConfig& c) {
             OpResult r;
             Eigen::Matrix2i M;
             M << 2, 1, 1, 1;
             if (c.model.contains("matrix")) {
                 auto rows = c.model["matrix"].get<std::vector<std::vector<int>>>();
                 M << rows[0][0], rows[0][1], rows[1][0], rows[1][1];
             }
             SuspensionModel s = make_suspension(M);
             HolonomyInvarianceReport h = holonomy_invariance_check(s, p.value("r", 0.5), p.value("v", 0.5), p.value("d_s", 0.5), p.value("R", 0.25));
             r.outputs = {{"mass_U", h.mass_U}, {"mass_V", h.mass_V}, {"s_discrepancy", h.s_discrepancy},
                          {"cs_ratio", h.cs_ratio}, {"K_R", h.K_R}, {"cs_within", h.cs_within}};
             r.provenance["mass_V"] = prov("quadrature", 1e-10);
             r.invariants_ok = h.s_discrepancy <= 1e-2 && h.cs_within;
             return r;
         }},
    };
    return table;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<std::string> known_ops() {
    std::vector<std::string> ops;
    for (const auto& [k, v] : op_table()) ops.push_back(k);
    return ops;
}

OpResult run_op(const ExperimentConfig& cfg) {
    ConeModel m = model_from_json(cfg.model);
    auto it = op_table().find(cfg.op);
    if (it == op_table().end()) fail(ErrorKind::Config, "unknown op: " + cfg.op);
    try {
        return it->second(m, cfg.params, cfg);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("params: ") + e.what());
    }
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

json to_json(const ResultRecord& r) {
    return {{"config_hash", r.config_hash}, {"record_hash", r.record_hash}, {"op", r.op}, {"model", r.model},
            {"params", r.params}, {"seed", r.seed}, {"outputs", r.outputs}, {"provenance", r.provenance},
            {"invariants_ok", r.invariants_ok}, {"wall_time", r.wall_time}, {"tool_version", r.tool_version}};
}

ResultRecord execute(const ExperimentConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ResultRecord rec;
    rec.op = cfg.op;
    rec.model = cfg.model;
    rec.params = cfg.params;
    rec.seed = cfg.seed;
    json key = {{"model", cfg.model}, {"op", cfg.op}, {"params", cfg.params}, {"seed", cfg.seed}, {"workers", cfg.workers}};
    rec.config_hash = fnv1a_hex(key.dump());
    OpResult res = run_op(cfg);
    rec.outputs = res.outputs;
    rec.provenance = res.provenance;
    rec.invariants_ok = res.invariants_ok;
    rec.record_hash = fnv1a_hex(rec.config_hash + res.outputs.dump() + res.provenance.dump());
    rec.wall_time = seconds_since(t0);
    return rec;
}

void append_record(const std::string& store, const ResultRecord& r) {
    std::ofstream out(store, std::ios::app);
    if (!out) fail(ErrorKind::Config, "cannot open result store: " + store);
    out << to_json(r).dump() << '\n';
}

int run_command(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        ResultRecord rec = execute(cfg);
        append_record(cfg.output, rec);
        out << to_json(rec).dump(2) << '\n';
        if (!rec.invariants_ok) {
            err << "invariant check failed for op " << rec.op << '\n';
            return kExitSuiteFailure;
        }
        return kExitPass;
    } catch (const SolverError& e) {
        err << "solver nonconvergence: " << e.what() << " (best residual " << e.best_residual() << ")\n";
        return kExitSolver;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        if (e.kind() == ErrorKind::Verification) return kExitSuiteFailure;
        if (e.kind() == ErrorKind::SolverNonconvergence) return kExitSolver;
        return kExitConfig;
    }
}

// ---- verify-all

namespace {

struct Suite {
    std::string name;
    std::string statement;
    std::function<bool(const ConeModel&)> applies;
    std::function<std::pair<bool, std::string>(const ConeModel&, std::uint64_t)> run;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Point sample_in(const ConeModel& m, std::mt19937_64& rng, double u_half, double t_half) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::VectorXd u(m.dim_u);
    for (int i = 0; i < m.dim_u; ++i) u(i) = u_half * U(rng);
    return Point(u, t_half * U(rng));
}

std::vector<Suite> suites() {
    auto all = [](const ConeModel&) { return true; };
    std::vector<Suite> s;
    s.push_back({"models", "leaf expansion rates lie in [a, A] with a > 0", all, [](const ConeModel& m, std::uint64_t) {
                     RateCheck rc = check_rates(m);
                     return std::make_pair(rc.ok && m.a > 0.0, fmt("rates in [%.4g, %.4g]", rc.min_rate, rc.max_rate));
                 }});
    s.push_back({"geometry", "d is a metric and b'' >= a(1 - b'^2) along geodesics", all, [](const ConeModel& m, std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     int bad = 0, viol = 0;
                     for (int k = 0; k < 12; ++k) {
                         Point x = sample_in(m, rng, 2.0, 1.0), y = sample_in(m, rng, 2.0, 1.0), z = sample_in(m, rng, 2.0, 1.0);
                         double dxy = distance(m, x, y), dyx = distance(m, y, x), dxz = distance(m, x, z), dzy = distance(m, z, y);
                         if (std::abs(dxy - dyx) > 1e-6 * (1 + dxy) || dxy > dxz + dzy + 1e-6) ++bad;
                         viol += height_profile(geodesic_connect(m, x, y), m.a).violations_quadratic;
                     }
                     return std::make_pair(bad == 0 && viol == 0, fmt("metric failures %g, convexity violations %g", bad, viol));
                 }});
    s.push_back({"hamenstadt", "rho scales by e^{at} under the flow and sits inside the d^u envelope", all,
                 [](const ConeModel& m, std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     std::uniform_real_distribution<double> U(-1.0, 1.0);
                     double worst = 0.0;
                     int outside = 0;
                     for (int k = 0; k < 40; ++k) {
                         Point x = sample_in(m, rng, 1.0, 1.0);
                         Point y = x;
                         for (int i = 0; i < m.dim_u; ++i) y.u(i) += 0.8 * U(rng);
                         worst = std::max(worst, scaling_check(m, x, y, 2.0 * U(rng)));
                         if (!comparison_check(m, x, y).inside) ++outside;
                     }
                     double tol = m.separable() ? 1e-5 : 1e-4;
                     return std::make_pair(worst <= tol && outside == 0, fmt("scaling discrepancy %.2e, envelope misses %g", worst, outside));
                 }});
    s.push_back({"gromov", "the cone is Gromov hyperbolic with delta measured on sampled triples", all,
                 [](const ConeModel& m, std::uint64_t seed) {
                     SampleBox box{6.0, -3.0, 3.0};
                     DeltaReport d = delta_estimate(m, box, m.separable() ? 200 : 100, seed);
                     bool ok = std::isfinite(d.delta_b) && d.failures == 0 && d.cross_within_2delta && d.delta_b < 10.0;
                     return std::make_pair(ok, fmt("delta_b %.4f, delta_4pt %.4f, failures %g", d.delta_b, d.delta_4pt, d.failures));
                 }});
    s.push_back({"uniformize", "kappa obeys the Harnack bound and d_b sits inside its two-sided bounds", all,
                 [](const ConeModel& m, std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     int bad = 0;
                     double worst_exact = 0.0;
                     for (int k = 0; k < 12; ++k) {
                         Point x = sample_in(m, rng, 2.0, 1.0), y = sample_in(m, rng, 2.0, 1.0);
                         double d = distance(m, x, y);
                         double ratio = kappa(m, x) / kappa(m, y);
                         if (ratio > std::exp(m.a * d) * (1 + 1e-9) || ratio < std::exp(-m.a * d) * (1 - 1e-9)) ++bad;
                         UniformizedDistance u = d_b(m, x, y);
                         if (u.lower > u.value * (1 + 1e-9) || u.value > u.upper * (1 + 1e-9)) ++bad;
                         if (has_exact_uniformization(m))
                             worst_exact = std::max(worst_exact, std::abs(u.value - (to_halfspace(m, x) - to_halfspace(m, y)).norm()));
                     }
                     return std::make_pair(bad == 0 && worst_exact <= 1e-9, fmt("failures %g, oracle error %.2e", bad, worst_exact));
                 }});
    s.push_back({"entropy", "separated counts grow like e^{ht} and are submultiplicative", all,
                 [](const ConeModel& m, std::uint64_t) {
                     EntropyReport e = entropy_estimate(m, 8);
                     double tol = m.separable() ? 0.05 : 0.1;
                     bool ok = std::abs(e.h_est - m.nominal_entropy()) <= tol && e.submultiplicative && e.fekete;
                     return std::make_pair(ok, fmt("h_est %.4f vs %.4f", e.h_est, m.nominal_entropy()));
                 }});
    s.push_back({"cone_mass", "mu_sigma of a unit cone is comparable to e^{-sigma b} G(sigma)", all,
                 [](const ConeModel& m, std::uint64_t) {
                     double h = entropy_estimate(m, 8).h_est;
                     double lo = INFINITY, hi = 0.0;
                     for (double v : {1.0, 0.5, 0.25})
                         for (double b : {-2.0, 0.0, 2.0}) {
                             Point x(Eigen::VectorXd::Zero(m.dim_u), b);
                             double r = crit_ratio(m, x, m.nominal_entropy() + v, h, 40.0).ratio;
                             lo = std::min(lo, r);
                             hi = std::max(hi, r);
                         }
                     return std::make_pair(hi / lo <= 2.0, fmt("ratio band [%.4f, %.4f]", lo, hi));
                 }});
    s.push_back({"patterson_sullivan", "renormalized cone measures converge to an Ahlfors h/a-regular boundary measure", all,
                 [](const ConeModel& m, std::uint64_t seed) {
                     double h = volume_entropy(m);
                     Point x(Eigen::VectorXd::Zero(m.dim_u), 0.0);
                     double cauchy = 0.0;
                     if (m.dim_u == 1) {
                         RenormalizedMeasure a = ps_renormalize(m, x, h + 0.25, 0.0, 8), b = ps_renormalize(m, x, h + 0.125, 0.0, 8);
                         for (std::size_t k = 0; k < a.partition.size(); ++k)
                             cauchy = std::max(cauchy, std::abs(a.partition[k].mass / b.partition[k].mass - 1.0));
                     }
                     RenormalizedMeasure c = ps_renormalize(m, x, h + 0.125, 1.0, 0);
                     AhlforsReport ar = ahlfors_check(c, {1.0, 0.5, 0.25, 0.125}, 8, seed);
                     double hi = 0, lo = INFINITY;
                     for (double r : ar.ratios) hi = std::max(hi, r), lo = std::min(lo, r);
                     bool ok = cauchy <= 0.05 && hi / lo <= 2.0;
                     return std::make_pair(ok, fmt("partition Cauchy %.4f, Ahlfors band %.4f", cauchy, hi / lo));
                 }});
    s.push_back({"margulis", "Margulis box masses scale by e^{ht} and agree in both integration orders",
                 [](const ConeModel& m) { return m.separable(); },
                 [](const ConeModel& m, std::uint64_t) {
                     ChartBox box{Eigen::VectorXd::Zero(m.dim_u), Eigen::VectorXd::Ones(m.dim_u), 0.0, 1.0};
                     double se = 0, fe = 0;
                     for (double t : {0.5, 1.0, 2.0}) {
                         MargulisReport r = margulis_checks(m, box, t);
                         se = std::max(se, r.scaling_error);
                         fe = std::max(fe, r.flip_error);
                     }
                     return std::make_pair(se <= 1e-3 && fe <= 1e-6, fmt("scaling error %.2e, flip error %.2e", se, fe));
                 }});
    s.push_back({"doubling_poincare", "mu_sigma is doubling on the uniformized cone and supports a 1-Poincare inequality",
                 [](const ConeModel& m) { return has_exact_uniformization(m); },
                 [](const ConeModel& m, std::uint64_t seed) {
                     double h = volume_entropy(m);
                     DoublingReport d = doubling_check(m, h + 1.0, 30, {0.25, 0.5, 1.0}, seed);
                     bool ok = std::isfinite(d.worst_ratio);
                     double q = 0.0;
                     if (m.dim_u == 1) {
                         PoincareReport p = poincare_check(m, h + 1.0, standard_test_functions(m), 9, seed);
                         q = p.worst_quotient;
                         ok = ok && std::isfinite(q) && p.evaluated > 0;
                     }
                     GrowthTable g = critical_failure_demo(m, Eigen::VectorXd::Zero(m.dim_u), 1.0, h);
                     ok = ok && g.increasing;
                     return std::make_pair(ok, fmt("doubling %.4f, Poincare quotient %.4f, critical growth slope %.4f", d.worst_ratio, q, g.last_increment_slope));
                 }});
    return s;
}

}  // namespace

std::vector<SuiteResult> verify_all(const json& model_spec, std::uint64_t seed) {
    std::vector<SuiteResult> out;
    ConeModel m;
    try {
        m = model_from_json(model_spec);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        // the rate invariant is checked at construction: report it as the models suite
        for (const auto& s : suites()) {
            SuiteResult r;
            r.name = s.name;
            r.statement = s.statement;
            r.passed = s.name != "models";
            r.skipped = r.passed;
            r.detail = r.passed ? "skipped: model suite failed" : std::string("error: ") + e.what();
            out.push_back(r);
        }
        return out;
    }
    bool models_ok = true;
    for (const auto& s : suites()) {
        SuiteResult r;
        r.name = s.name;
        r.statement = s.statement;
        if (!models_ok || !s.applies(m)) {
            r.skipped = true;
            r.passed = true;
            r.detail = models_ok ? "not applicable to this model" : "skipped: model suite failed";
            out.push_back(r);
            continue;
        }
        auto t0 = std::chrono::steady_clock::now();
        try {
            auto [ok, detail] = s.run(m, seed);
            r.passed = ok;
            r.detail = detail;
        } catch (const Error& e) {
            r.passed = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = seconds_since(t0);
        if (s.name == "models" && !r.passed) models_ok = false;
        out.push_back(r);
    }
    return out;
}

int verify_all_command(const std::string& model_path, std::ostream& out, std::ostream& err) {
    json spec;
    try {
        std::ifstream in(model_path);
        if (!in) fail(ErrorKind::Config, "cannot open model spec: " + model_path);
        try {
            in >> spec;
        } catch (const json::exception& e) {
            fail(ErrorKind::Config, std::string("malformed model JSON: ") + e.what());
        }
        std::uint64_t seed = 1;
        if (const char* env = std::getenv("CONE_LAB_SEED")) seed = std::stoull(env);
        auto results = verify_all(spec, seed);
        bool all = true;
        out << std::left << std::setw(20) << "suite" << std::setw(6) << "result" << "  detail\n";
        for (const auto& r : results) {
            std::string tag = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
            if (!r.passed) all = false;
            out << std::left << std::setw(20) << r.name << std::setw(6) << tag << "  " << r.statement << " | " << r.detail;
            if (!r.skipped) out << " (" << std::fixed << std::setprecision(2) << r.seconds << "s)" << std::defaultfloat;
            out << '\n';
        }
        return all ? kExitPass : kExitSuiteFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

// ---- export

std::vector<std::string> export_plot_data(const std::string& store, const std::string& query, const std::string& out_dir) {
    std::map<std::string, std::string> q;
    std::stringstream ss(query);
    std::string part;
    while (std::getline(ss, part, ',')) {
        auto eq = part.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Config, "query terms look like key=value: " + part);
        q[part.substr(0, eq)] = part.substr(eq + 1);
    }
    if (!q.count("op")) fail(ErrorKind::Config, "query needs op=<name>");
    std::ifstream in(store);
    if (!in) fail(ErrorKind::Config, "cannot open result store: " + store);
    std::vector<json> hits;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json r = json::parse(line, nullptr, false);
        if (r.is_discarded() || r.value("op", "") != q["op"]) continue;
        if (q.count("model") && r["model"].value("kind", "") != q["model"]) continue;
        hits.push_back(r);
    }
    if (hits.empty()) fail(ErrorKind::Config, "query matched no records");
    std::ostringstream csv;
    csv.precision(12);
    const std::string& op = q["op"];
    auto label = [](const json& r) { return r["model"].value("kind", "?"); };
    if (op == "entropy_estimate") {
        csv << "s,log_V_s,model\n";
        for (const auto& r : hits) {
            auto s = r["outputs"]["s"].get<std::vector<double>>();
            auto V = r["outputs"]["V"].get<std::vector<double>>();
            for (std::size_t k = 0; k < s.size(); ++k) csv << s[k] << ',' << std::log(V[k]) << ',' << label(r) << '\n';
        }
    } else if (op == "laplace_G") {
        csv << "sigma,G,tail_error\n";
        for (const auto& r : hits)
            for (const auto& row : r["outputs"]["rows"]) csv << row["sigma"].get<double>() << ',' << row["G"].get<double>() << ',' << row["tail_error"].get<double>() << '\n';
    } else if (op == "delta_estimate") {
        csv << "n,delta_b,model\n";
        for (const auto& r : hits)
            for (const auto& pr : r["outputs"]["refinement_history"]) csv << pr["n"].get<int>() << ',' << pr["delta_b"].get<double>() << ',' << label(r) << '\n';
    } else if (op == "critical_failure_demo") {
        csv << "sigma,T,mass,mass_over_T\n";
        for (const auto& r : hits)
            for (const auto& row : r["outputs"]["rows"])
                csv << r["outputs"]["sigma"].get<double>() << ',' << row["T"].get<double>() << ',' << row["mass"].get<double>() << ',' << row["mass_over_T"].get<double>() << '\n';
    } else {
        csv << "record,key,value\n";
        for (std::size_t i = 0; i < hits.size(); ++i)
            for (const auto& [k, v] : hits[i]["outputs"].items())
                if (v.is_number()) csv << i << ',' << k << ',' << v.get<double>() << '\n';
    }
    std::filesystem::create_directories(out_dir);
    std::string path = (std::filesystem::path(out_dir) / (op + ".csv")).string();
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Config, "cannot write " + path);
    out << csv.str();
    return {path};
}

int export_command(const std::string& store, const std::string& query, const std::string& out_dir, std::ostream& out,
                   std::ostream& err) {
    try {
        for (const auto& p : export_plot_data(store, query, out_dir)) out << p << '\n';
        return kExitPass;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace cone_lab
