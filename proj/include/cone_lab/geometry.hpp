#pragma once

#include <string>
#include <vector>

#include "cone_lab/models.hpp"

namespace cone_lab {

struct GeodesicSample {
    Point p;
    double s = 0.0;
    double b = 0.0;
    double b_prime = 0.0;
};

struct GeodesicPath {
    std::vector<GeodesicSample> samples;
    double total_length = 0.0;
    Point start;
    Point end;
    double solver_residual = 0.0;
    std::string method;

    double b_min() const;
};

struct GeodesicOptions {
    double tol = 1e-9;
    int n_samples = 257;
    int max_iter = 200;
};

GeodesicPath geodesic_connect(const ConeModel& model, const Point& x, const Point& y, const GeodesicOptions& opt = {});

// Closed-form distance for a 1-D constant-rate leaf (the hyperbolic plane scaled by 1/a).
double halfplane_distance(double a, const Point& x, const Point& y);

double distance(const ConeModel& model, const Point& x, const Point& y, double tol = 1e-9);

// Induced leaf distance along the straight chart segment at fixed height.
double leaf_distance(const ConeModel& model, const Point& x, const Point& y);

// P_x(y) = f^{b(x)-b(y)} y
Point project(const ConeModel& model, const Point& x, const Point& y);

// Metric length of the sampled polyline, each chord integrated in the chart.
double path_length(const ConeModel& model, const GeodesicPath& path);

// Leaf length of P_x o gamma for a path starting at x.
double projected_leaf_length(const ConeModel& model, const GeodesicPath& path);

struct ProfileRow {
    double s = 0.0;
    double b = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double margin_quadratic = 0.0;  // b'' - a (1 - b'^2)
    double margin_sqrt = 0.0;       // b'' - a sqrt(1 - b'^2)
};

struct HeightProfile {
    std::vector<ProfileRow> rows;
    double a = 0.0;
    double tol_fd = 1e-3;
    int violations_quadratic = 0;
    int violations_sqrt = 0;
    double min_margin_quadratic = 0.0;
    double min_margin_sqrt = 0.0;
};

HeightProfile height_profile(const GeodesicPath& path, double a, double tol_fd = 1e-3);

// sup_n |(d(gamma(n), x) - n) - (b(x) - b(gamma(0)))| for the descending ray from ray_start.
double busemann_check(const ConeModel& model, const Point& ray_start, const Point& x, double horizon);

struct MeshOptions {
    int n = 256;
    int radius = 10;
    double margin = 0.25;
    // 0: ambient metric; > 0: conformal density exp(-weight_a * t)
    double weight_a = 0.0;
    double u_lo = 0, u_hi = 0, t_lo = 0, t_hi = 0;  // box; auto when u_lo == u_hi
};

struct MeshResult {
    double length = 0.0;
    int nodes = 0;
    double hu = 0.0;
    double ht = 0.0;
};

// Dense-graph shortest path on a chart mesh; an upper bound used only as an oracle (dim_u = 1).
MeshResult mesh_distance(const ConeModel& model, const Point& x, const Point& y, MeshOptions opt = {});

std::string path_to_csv(const GeodesicPath& path);

}  // namespace cone_lab
