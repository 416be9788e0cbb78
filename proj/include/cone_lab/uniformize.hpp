#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cone_lab/geometry.hpp"

namespace cone_lab {

// kappa = e^{-a b}; zero at boundary points (t = +inf).
double kappa(const ConeModel& model, const Point& x);

// Models whose uniformization is Euclidean in (u, e^{-a t}/a): one rate shared by all leaf axes.
bool has_exact_uniformization(const ConeModel& model);

// (u, y) half-space coordinates with y = e^{-a t}/a; y = 0 for boundary points.
Eigen::VectorXd to_halfspace(const ConeModel& model, const Point& x);
Point from_halfspace(const ConeModel& model, const Eigen::VectorXd& q);
Point boundary_point_at(const Eigen::VectorXd& u);  // the point at t = +inf over u

double length_b(const ConeModel& model, const GeodesicPath& path);

enum class DbMethod { Oracle, GeodesicFamily, MeshDijkstra, BrokenPath };
std::string to_string(DbMethod m);

struct UniformizedDistance {
    double value = 0.0;
    DbMethod method = DbMethod::Oracle;
    double lower = 0.0;
    double upper = 0.0;
};

// use_mesh refines the upper bound with the weighted chart mesh (1-D leaves only).
UniformizedDistance d_b(const ConeModel& model, const Point& x, const Point& y, bool use_mesh = false);

// Length of the ascending vertical ray: the distance to the boundary.
double boundary_distance(const ConeModel& model, const Point& x);
// Psi_x: leaf coordinate of the endpoint of the ascending ray.
Eigen::VectorXd boundary_point(const ConeModel& model, const Point& x);

struct BoundaryLimit {
    std::vector<double> heights;
    std::vector<double> values;  // d_b at each truncation height
    bool cauchy = true;
    double limit = 0.0;
};

BoundaryLimit boundary_d_b(const ConeModel& model, const Point& w, const Point& z,
                           const std::vector<double>& offsets = {5.0, 10.0, 15.0}, double cauchy_tol = 1e-3);

struct BilipschitzBoundaryReport {
    double K = 1.0;
    int pairs = 0;
    int non_cauchy = 0;
    std::vector<double> ratios;  // d_b(Psi w, Psi z) / (e^{-a b(x)} rho_x(w, z))
};

BilipschitzBoundaryReport boundary_bilipschitz_check(const ConeModel& model, const Point& x,
                                                     const std::vector<std::pair<Point, Point>>& pairs);

// Cone C(apex, r) truncated to heights apex.t + (t_min, T].
struct ConeRegion {
    Point apex;
    double radius = 1.0;
    double t_min = 0.0;
    double T = INFINITY;
};

bool cone_contains(const ConeModel& model, const ConeRegion& c, const Point& p);
nlohmann::json to_json(const ConeRegion& c);

struct InclusionReport {
    double L_star = 0.0;
    double t_star = 0.0;
    bool cone_sandwich_found = false;
    double C_star = 0.0;  // sub inclusion constant, NaN unless r <= d_b(x)/2
    int samples = 0;
    int inconclusive = 0;
};

// Oracle models only. L_cap bounds the acceptable L*; t* is scanned upward from 0.
InclusionReport cone_ball_inclusions(const ConeModel& model, const Point& x, double r, double L_cap = 4.0,
                                     int samples = 400, std::uint64_t seed = 1);

struct SubWhitney {
    Point z;
    double c0 = 0.0;
    bool first_case = false;  // l_b(eta) >= 2r/3
};

// x may be a boundary point (t = +inf). L is the uniformity constant of vertical geodesics.
SubWhitney subwhitney_center(const ConeModel& model, const Point& x, double r, double L = 1.0);

struct UniformCurveReport {
    double L = 0.0;
    double L_one = 0.0;  // min{l_b(<=t), l_b(>=t)} / d_b(gamma(t))
    double L_two = 0.0;  // l_b(gamma) / d_b(endpoints)
};

UniformCurveReport uniform_curve_check(const ConeModel& model, const GeodesicPath& path);

nlohmann::json to_json(const InclusionReport& r);

}  // namespace cone_lab
