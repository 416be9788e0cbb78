#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cone_lab/measures.hpp"

namespace cone_lab {

enum class BallClass { Boundary, SubWhitney, Intermediate };
std::string to_string(BallClass c);

struct DoublingReport {
    double sigma = 0.0;
    double worst_ratio = 1.0;
    int n_balls = 0;
    double r_min = 0.0, r_max = 0.0;
    int boundary = 0, subwhitney = 0, intermediate = 0;
    double worst_boundary = 0.0, worst_subwhitney = 0.0, worst_intermediate = 0.0;
    double center_spread = 1.0;  // max/min ratio among balls of one class and radius
    double cone_upper_K = 0.0;   // mu_sigma(C(x, L')) / (e^{-sigma b(x)} mu(B(x,1))), L' = 2
};

// Exact-uniformization models; balls in the (u, y) picture where d_b is Euclidean.
DoublingReport doubling_check(const ConeModel& model, double sigma, int n_balls, const std::vector<double>& radii,
                              std::uint64_t seed = 1);
nlohmann::json to_json(const DoublingReport& r);

// Riemannian volume of an ambient unit ball (constant in homogeneous models).
double ambient_unit_ball_volume(const ConeModel& model);

// Test function on the (u, y) half-plane with its exact d_b upper gradient.
struct TestFunction {
    std::string name;
    std::function<double(double u, double y)> f;
    std::function<double(double u, double y)> g;
    bool needs_interior = false;  // gradient not integrable up to the boundary
};

std::vector<TestFunction> standard_test_functions(const ConeModel& model);

struct PoincareBall {
    BallClass cls = BallClass::SubWhitney;
    double uc = 0.0, yc = 0.0, r = 0.0;
    std::string function;
    double lhs = 0.0;  // mean |f - f_B|
    double rhs = 0.0;  // diam(B) mean g
    double quotient = 0.0;
};

struct PoincareReport {
    double sigma = 0.0;
    double worst_quotient = 0.0;
    double worst_boundary = 0.0, worst_subwhitney = 0.0, worst_intermediate = 0.0;
    int evaluated = 0;
    int excluded = 0;
    std::vector<PoincareBall> balls;
};

// 1-D leaves only; lambda = 1.
PoincareReport poincare_check(const ConeModel& model, double sigma, const std::vector<TestFunction>& functions,
                              int n_balls, std::uint64_t seed = 1);
nlohmann::json to_json(const PoincareReport& r);

struct GrowthRow {
    double T = 0.0;
    double mass = 0.0;
    double mass_over_T = 0.0;
};

struct GrowthTable {
    double sigma = 0.0;
    std::vector<GrowthRow> rows;
    bool increasing = true;
    double last_increment_slope = 0.0;  // (mass(T_k) - mass(T_{k-1})) / (T_k - T_{k-1}) at the end
};

// mu_sigma of B_b(boundary point, r) restricted to heights <= T.
GrowthTable critical_failure_demo(const ConeModel& model, const Eigen::VectorXd& boundary_u, double r, double sigma,
                                  const std::vector<double>& Ts = {1.0, 2.0, 4.0, 8.0});
std::string to_csv(const GrowthTable& t);

}  // namespace cone_lab
