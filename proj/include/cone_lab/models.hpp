#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cone_lab/errors.hpp"

namespace cone_lab {

enum class ModelKind { HalfPlane, Diagonal, Warped, SuspensionCover };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Chart point (u, t); t is the height b.
struct Point {
    Eigen::VectorXd u;
    double t = 0.0;

    Point() = default;
    Point(Eigen::VectorXd u_, double t_) : u(std::move(u_)), t(t_) {}
    Point(double u1, double t_) : u(Eigen::VectorXd::Constant(1, u1)), t(t_) {}
    Point(double u1, double u2, double t_) : u(Eigen::Vector2d(u1, u2)), t(t_) {}

    int dim() const { return static_cast<int>(u.size()); }
};

bool same_point(const Point& x, const Point& y, double tol = 0.0);

struct RateGrid {
    int n = 201;
    double lo = -10.0;
    double hi = 10.0;
};

// Expanding cone on a single global chart with metric dt^2 + sum_i phi_i(u,t)^2 du_i^2.
class ConeModel {
public:
    ModelKind kind = ModelKind::HalfPlane;
    int dim_u = 1;
    double a = 1.0;
    double A = 1.0;
    std::vector<double> rates;  // constant per-axis rates (all kinds except Warped)
    double epsilon = 0.0;       // Warped only
    double frequency = 1.0;     // Warped only
    double base_rate = 1.0;     // Warped only
    std::string label;

    double phi(int i, const Eigen::VectorXd& u, double t) const;
    double dphi_dt(int i, const Eigen::VectorXd& u, double t) const;
    double dphi_du(int i, int j, const Eigen::VectorXd& u, double t) const;
    double d2phi_dt2(int i, const Eigen::VectorXd& u, double t) const;
    double d2phi_dudt(int i, int j, const Eigen::VectorXd& u, double t) const;
    double d2phi_du2(int i, int j, int k, const Eigen::VectorXd& u, double t) const;
    double log_rate(int i, const Eigen::VectorXd& u, double t) const;  // d/dt log phi_i

    // Product of warps; the volume density in chart coordinates.
    double volume_density(const Eigen::VectorXd& u, double t) const;

    // phi independent of u
    bool separable() const { return kind != ModelKind::Warped || epsilon == 0.0; }
    // 1-D leaf with constant rate: isometric to a rescaled hyperbolic plane.
    bool is_halfplane_like() const;
    bool equal_rates() const;
    // Sum of leaf rates; the entropy of homogeneous models. Warped: base_rate.
    double nominal_entropy() const;
};

ConeModel make_halfplane(double a);
ConeModel make_diagonal(const std::vector<double>& rates);
ConeModel make_warped(double epsilon, double frequency, double base_rate, const RateGrid& grid = {});

Point flow(const ConeModel& model, const Point& x, double s);
double dflow_factor(const ConeModel& model, const Point& x, int axis, double s);

struct RateCheck {
    double min_rate = 0.0;
    double max_rate = 0.0;
    bool ok = false;
};
// Grid check of a <= d/dt log phi_i <= A.
RateCheck check_rates(const ConeModel& model, const RateGrid& grid = {}, double tol = 1e-9);

// Cat-map style suspension of a hyperbolic toral automorphism with roof 1.
// Points live on the cover R^2 x R; eigencoordinates (x_u, x_s) are an orthonormal frame,
// so the metric is dt^2 + lambda^{2t} dx_u^2 + lambda^{-2t} dx_s^2.
struct SPoint {
    Eigen::Vector2d p;  // standard torus-lift coordinates
    double t = 0.0;
};

class SuspensionModel {
public:
    Eigen::Matrix2i matrix;
    double lambda = 1.0;    // |leading eigenvalue|
    double lambda_u = 1.0;  // signed unstable eigenvalue
    double period = 1.0;
    Eigen::Vector2d e_u;
    Eigen::Vector2d e_s;
    ConeModel cover;

    Eigen::Vector2d to_eigen(const Eigen::Vector2d& p) const;
    Eigen::Vector2d from_eigen(const Eigen::Vector2d& c) const;

    SPoint flow(const SPoint& x, double s) const;
    // Reduce to the fundamental domain t in [0,1), p in [0,1)^2 using (p, t+1) ~ (M p, t).
    SPoint reduce(const SPoint& x) const;
    double torus_gap(const SPoint& x, const SPoint& y) const;

    // Unstable-leaf chart coordinate of z (the x_u eigencoordinate) at its height.
    Point cover_point(const SPoint& z) const;
    SPoint along_unstable(const SPoint& x, double r) const;
    SPoint along_stable(const SPoint& x, double r) const;

    // s-holonomy W^u(x) -> W^u(y), y on W^s(x): slide along stable leaves at fixed height.
    SPoint holonomy_s(const SPoint& x, const SPoint& y, const SPoint& z) const;
    // cs-holonomy W^u(x) -> W^u(y), y on W^cs(x): slide along center-stable leaves.
    SPoint holonomy_cs(const SPoint& x, const SPoint& y, const SPoint& z) const;
    // Deck transformation of the cu-leaf cover: (x_u, t) -> (lambda x_u, t - 1).
    Point deck(const Point& q) const;
};

SuspensionModel make_suspension(const Eigen::Matrix2i& matrix);

// One-parameter linear cocycle s -> Df^s on E^u.
using Cocycle = std::function<Eigen::MatrixXd(double)>;

struct AdaptedMetric {
    double T = 0.0;
    Eigen::MatrixXd gram;  // g_*(v,w) = v^T gram w
    double a_star = 0.0;
    double A_star = 0.0;
    double worst_ratio_violation = 0.0;  // max relative violation of the starred sandwich
    double raw_violation = 0.0;          // max relative violation of the raw constants
    int samples = 0;

    double norm(const Eigen::VectorXd& v) const;
};

struct AdaptOptions {
    int samples = 400;
    double s_max = 6.0;
    double tol = 1e-6;
    unsigned seed = 7;
};

AdaptedMetric adapt_metric(double C, double a, double A, const Cocycle& cocycle, const AdaptOptions& opt = {});

Cocycle shear_cocycle(double lambda);
Cocycle diagonal_cocycle(const std::vector<double>& rates);

// JSON model spec {kind, a, A, rates[], epsilon, frequency, matrix[][]}.
nlohmann::json model_to_json(const ConeModel& model);
ConeModel model_from_json(const nlohmann::json& j);

}  // namespace cone_lab
