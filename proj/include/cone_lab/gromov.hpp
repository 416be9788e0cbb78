#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cone_lab/models.hpp"

namespace cone_lab {

double gromov_product_b(const ConeModel& model, const Point& x, const Point& y);
double gromov_product_p(const ConeModel& model, const Point& x, const Point& y, const Point& p);

// Spread of the two smallest entries; a triple is a delta-triple iff this is <= delta.
double triple_defect(double p, double q, double r);

struct SampleBox {
    double u_half = 20.0;  // |u_i| <= u_half
    double t_lo = -5.0;
    double t_hi = 5.0;
};

Point sample_point(const ConeModel& model, const SampleBox& box, std::uint64_t& state);

struct DeltaReport {
    double delta_b = 0.0;
    double delta_4pt = 0.0;
    double cross_defect = 0.0;          // worst defect of A_b(Q)
    double cross_identity_error = 0.0;  // |defect A_o(Q) - defect A_b(Q)|
    bool cross_within_2delta = true;
    int n_samples = 0;
    int pool = 0;
    int failures = 0;
    std::vector<std::pair<int, double>> refinement_history;  // (n, delta_b)
};

// n triples and n quadruples drawn from a pool of ceil(2 sqrt n) + 4 points with cached distances;
// sample k uses only the first ceil(2 sqrt(k+1)) + 4 pool points.
DeltaReport delta_estimate(const ConeModel& model, const SampleBox& box, int n, std::uint64_t seed = 1);

nlohmann::json to_json(const DeltaReport& r);

struct MinHeightReport {
    double discrepancy = 0.0;     // |b_min - (x|y)_b|
    double segment_error = 0.0;   // max |d(x,w) - (b(x) - b(w))| on the descending arc
    double b_min = 0.0;
    double product = 0.0;
};

MinHeightReport min_height_check(const ConeModel& model, const Point& x, const Point& y);

// e^{-a (y|z)_b} / (e^{-a b(x)} rho_x(P_x y, P_x z)), requires d(y,z) >= 1.
double visual_metric_check(const ConeModel& model, const Point& x, const Point& y, const Point& z);

// Boundary version: y, z are the ascending rays over the given leaf coordinates, truncated at each height.
std::vector<double> visual_metric_rays(const ConeModel& model, const Point& x, const Eigen::VectorXd& uy,
                                       const Eigen::VectorXd& uz, const std::vector<double>& heights);

}  // namespace cone_lab
