#pragma once

#include <cstdint>

#include "cone_lab/models.hpp"

namespace cone_lab {

struct RhoEvaluation {
    double value = 0.0;
    double t_star = 0.0;  // sup{t : d^u(f^t x, f^t y) <= 1}
    int iterations = 0;
    double tol = 0.0;
};

// Leaf distance after flowing both points by t.
double flowed_leaf_distance(const ConeModel& model, const Point& x, const Point& y, double t);

// tol <= 0 picks the default: 1e-9 for separable leaves, 1e-6 otherwise.
RhoEvaluation rho(const ConeModel& model, const Point& x, const Point& y, double tol = 0.0);

double scaling_check(const ConeModel& model, const Point& x, const Point& y, double t, double tol = 0.0);

struct ComparisonReport {
    bool on_leaf = true;
    double d = 0.0;      // ambient distance (off-leaf case)
    double du = 0.0;     // leaf distance
    double rho = 0.0;
    double lower = 0.0;  // envelope
    double upper = 0.0;
    bool inside = false;
    // rho / upper and lower / rho; 1 means the envelope is attained
    double upper_ratio = 0.0;
    double lower_ratio = 0.0;
};

// Same-leaf pairs: the d^u vs rho envelope. Off-leaf pairs: the projection bound.
ComparisonReport comparison_check(const ConeModel& model, const Point& x, const Point& y, double tol = 0.0);

// rho between two points of one unstable leaf of the suspension, through the cover chart.
double suspension_rho(const SuspensionModel& s, const SPoint& z, const SPoint& w);

struct BilipschitzReport {
    double R = 0.0;
    double K = 1.0;
    double max_shift = 0.0;  // largest |flow offset| among sampled y
    int samples = 0;
};

// Worst distortion of rho under cs-holonomy W^u(x) -> W^u(y), d^cs(x,y) <= R, z,w in B_rho(x,R).
BilipschitzReport bilipschitz_estimate(const SuspensionModel& s, double R, int samples = 200, std::uint64_t seed = 1);

// max |h(f^t z) - f^t h(z)| over random configurations.
double holonomy_equivariance_error(const SuspensionModel& s, int samples = 1000, std::uint64_t seed = 1);

}  // namespace cone_lab
