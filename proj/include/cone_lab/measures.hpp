#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cone_lab/uniformize.hpp"

namespace cone_lab {

enum class MeasureMethod { Quadrature, MonteCarlo, ClosedForm };
std::string to_string(MeasureMethod m);

struct MeasureEstimate {
    double value = 0.0;
    double abs_error = 0.0;
    MeasureMethod method = MeasureMethod::ClosedForm;
    long n_evals = 0;
};

nlohmann::json to_json(const MeasureEstimate& m);

// Leaf volume growth rate: h for homogeneous models, the base rate for warped ones.
double volume_entropy(const ConeModel& model);

// mu_sigma of a cone region: int e^{-sigma t} prod phi_i du dt. Throws Divergent for infinite mass.
MeasureEstimate mu_sigma_region(const ConeModel& model, const ConeRegion& region, double sigma);

// mu_sigma of the d_b-ball B_b(center, r), restricted to heights t <= T_max. Exact-uniformization models only;
// center may be a boundary point.
MeasureEstimate mu_sigma_ball(const ConeModel& model, const Point& center, double r, double sigma,
                              double T_max = INFINITY);

// Closed ball B_rho(x, radius) on the leaf of x, as leaf coordinates (1-D: [lo, hi]; separable: ellipsoid semi-axes).
struct LeafBall {
    Point center;
    double radius = 0.0;
    Eigen::VectorXd lo, hi;     // 1-D interval endpoints (size 1)
    Eigen::VectorXd semi_axes;  // separable models
};

LeafBall rho_ball(const ConeModel& model, const Point& x, double radius);

struct NetResult {
    Point center;
    double ball_radius = 0.0;  // e^{-a l}
    double separation = 0.0;   // e^{-a s}
    std::vector<Eigen::VectorXd> points;
    std::int64_t count = 0;
    bool points_complete = true;  // false when only the count was produced
    int completions = 0;          // points added by the maximality audit
};

struct NetOptions {
    std::int64_t max_points = 20000;  // above this only the count is produced
    bool audit = true;
};

// Maximal e^{-as}-separated subset of the closed ball B_rho(x, e^{-al}).
NetResult separated_count(const ConeModel& model, const Point& x, double s, double l, const NetOptions& opt = {});

// Count only, in floating point so that large scales do not overflow.
double separated_count_value(const ConeModel& model, const Point& x, double s, double l = 0.0);

struct NetAudit {
    double min_separation_ratio = INFINITY;  // min pairwise rho / separation
    double max_gap_ratio = 0.0;              // max over audit grid of rho to the net / separation
    bool separated = true;
    bool maximal = true;
    int grid = 0;
};

NetAudit audit_net(const ConeModel& model, const NetResult& net, int grid = 400);

struct EntropyReport {
    double h_est = 0.0;
    std::vector<double> s;
    std::vector<double> V;
    bool monotone = true;
    bool submultiplicative = true;
    double worst_submult_ratio = 0.0;  // max V_{s+t} / (V_s V_t)
    double slack = 1.0;                // 2^{dim_u}
    bool fekete = true;                // h_est <= log(slack V_s)/s for all s
};

EntropyReport entropy_estimate(const ConeModel& model, int s_max, const Point& x = Point());
nlohmann::json to_json(const EntropyReport& r);

struct LaplaceG {
    double value = 0.0;
    double quad_error = 0.0;  // half the gap between lower and upper step sums
    double tail = 0.0;        // tail bound beyond s_max, included in value
    double h_used = 0.0;
};

// G(sigma) = int_0^inf e^{-sigma t} V_t dt from measured V_t on a grid of step dt plus a tail bound.
LaplaceG laplace_G(const ConeModel& model, double sigma, double s_max, double h_est, double dt = 0.005,
                   const Point& x = Point());

struct CritReport {
    double ratio = 0.0;          // mu_sigma(C(x,1)) / (e^{-sigma b(x)} G(sigma))
    double numerator = 0.0;
    double G = 0.0;
    double shifted_pos = 0.0;    // l = +1 variant
    double shifted_neg = 0.0;    // l = -1 variant
};

CritReport crit_ratio(const ConeModel& model, const Point& x, double sigma, double h_est, double s_max = 40.0);

struct PartitionCell {
    Eigen::VectorXd lo, hi;  // leaf interval (1-D)
    double mass = 0.0;
    double error = 0.0;
    bool reliable = true;
};

struct RenormalizedMeasure {
    double sigma = 0.0;
    double l = 0.0;
    double h = 0.0;
    Point apex;
    double normalizer = 0.0;  // mu_sigma(C(apex, e^{al}))
    std::vector<PartitionCell> partition;
    std::map<double, double> interior_below;  // T -> mass of the cone truncated at T
    double total_mass = 0.0;                  // e^{sigma l}
    const ConeModel* model = nullptr;

    // mass of the sub-cone over B_rho(c, r), c on the apex leaf
    double cone_mass(const Point& c, double r) const;
    double interior_mass_below(double T) const;
};

// b(x) must vanish. Partition: n_cells leaf intervals (1-D) or none (2-D).
RenormalizedMeasure ps_renormalize(const ConeModel& model, const Point& x, double sigma, double l, int n_cells = 8,
                                   const std::vector<double>& Ts = {1.0, 2.0, 4.0});

struct AhlforsReport {
    double K = 1.0;
    double exponent = 0.0;  // h/a
    std::vector<double> ratios;
    int excluded = 0;
    double center_spread = 1.0;  // max/min of per-center mean ratio
};

AhlforsReport ahlfors_check(const RenormalizedMeasure& m, const std::vector<double>& radii, int centers = 8,
                            std::uint64_t seed = 1);

// Box E x [t0, t1] in chart coordinates (E a leaf interval or rectangle).
struct ChartBox {
    Eigen::VectorXd u_lo, u_hi;
    double t0 = 0.0, t1 = 1.0;
};

struct MargulisReport {
    double mass = 0.0;          // m(box) via d nu_{f^t x} dt
    double mass_flipped = 0.0;  // via e^{ht} dt d nu_x
    double image_mass = 0.0;    // m(f^t box)
    double scaling_error = 0.0; // |image / (e^{ht} m) - 1|
    double flip_error = 0.0;    // |mass - mass_flipped|
    double nu_normalization = 0.0;  // nu at height s is c e^{hs} du with c = 1 / Leb(B_rho(x,1)) at height 0
    double h = 0.0;
};

MargulisReport margulis_checks(const ConeModel& model, const ChartBox& box, double t);

struct HolonomyInvarianceReport {
    double mass_U = 0.0;
    double mass_V = 0.0;
    double s_discrepancy = 0.0;  // |m(V)/m(U) - 1| for the s-holonomy
    double cs_ratio = 0.0;       // nu_y(h^cs U) / nu_x(U)
    double K_R = 1.0;
    bool cs_within = true;
};

// U = union_{|tau| < v} f^tau(B_rho(x, r)); the s-holonomy slides by d_s along W^s, the cs one by R.
HolonomyInvarianceReport holonomy_invariance_check(const SuspensionModel& s, double r, double v, double d_s,
                                                   double R);

}  // namespace cone_lab
