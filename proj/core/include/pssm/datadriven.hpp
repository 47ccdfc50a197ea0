#pragma once

#include "pssm/integrator.hpp"
#include "pssm/poly2.hpp"
#include "pssm/spline.hpp"
#include "pssm/systems.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pssm {

/// Two leading POD modes of a centered snapshot matrix.
struct PodChart {
    Eigen::MatrixXd V;  // N x 2, orthonormal
    Eigen::VectorXd singular_values;
    Eigen::VectorXd fixed_point;

    /// sigma_2 / sigma_3 (infinity when only two values exist or sigma_3 = 0)
    double gap() const;
};

PodChart pod_chart(const TrajectoryDataset& data);

struct FitDiagnostics {
    int rows = 0;
    int unknowns = 0;
    double relative_residual = 0;
    double condition = 1;  // 2-norm condition of the column-scaled design
    bool ill_conditioned = false;
};

inline constexpr double kIllConditioned = 1e12;
inline constexpr double kDefaultRidge = 1e-10;

struct ManifoldFit {
    Poly2 W;  // N-valued, degrees 2..M_W
    FitDiagnostics diagnostics;
};

struct ReducedFit {
    Poly2 R;  // 2-valued, degrees 1..M_R
    FitDiagnostics diagnostics;
};

/// Least squares for x - V u = sum_k W^k u^k with u = V^T x; columns are
/// scaled to unit norm and a ridge term `ridge * I` acts on the scaled system.
ManifoldFit fit_manifold(const TrajectoryDataset& data, const PodChart& chart, int mw, double ridge = kDefaultRidge);
/// u' by fourth-order central differences (two rows dropped at each end).
ReducedFit fit_reduced_dynamics(const TrajectoryDataset& data, const PodChart& chart, int mr,
                                double ridge = kDefaultRidge);

/// Fourth-order central difference of the rows of Y (uniform step dt).
Eigen::MatrixXd central_difference4(const Eigen::MatrixXd& Y, double dt);

struct SsmModel {
    double mu = 0;
    PodChart chart;
    Poly2 W;
    Poly2 R;
    FitDiagnostics manifold_diagnostics;
    FitDiagnostics reduced_diagnostics;

    int mw() const noexcept { return W.max_degree(); }
    int mr() const noexcept { return R.max_degree(); }
    int dimension() const noexcept { return static_cast<int>(chart.V.rows()); }
    bool bifurcation_capturing() const noexcept { return mr() >= 3; }

    Eigen::Vector2d project(const Eigen::VectorXd& x) const { return chart.V.transpose() * (x - chart.fixed_point); }
    /// Full state x0 + V u + W(u).
    Eigen::VectorXd lift(const Eigen::Vector2d& u) const { return chart.fixed_point + chart.V * u + W(u); }
    /// Centered state V u + W(u).
    Eigen::VectorXd lift_centered(const Eigen::Vector2d& u) const { return chart.V * u + W(u); }
    Eigen::Vector2d reduced(const Eigen::Vector2d& u) const { return R(u); }
    Eigen::Matrix2d linear_part() const;
};

SsmModel fit_ssm_model(const TrajectoryDataset& data, int mw, int mr, double ridge = kDefaultRidge);

/// New reduced coordinates zeta with u = Q zeta: V' = V Q, W'(zeta) = W(Q zeta),
/// R'(zeta) = Q^T R(Q zeta). Q must be orthogonal.
SsmModel apply_gauge(const SsmModel& model, const Eigen::Matrix2d& Q);

inline constexpr double kMaxPrincipalAngleDeg = 80.0;

/// Orthogonal Procrustes minimizer Q of ||B Q - A||_F for N x 2 frames.
Eigen::Matrix2d procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
/// Largest principal angle between span(A) and span(B), in degrees.
double principal_angle_deg(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Aligns every chart to its predecessor (the first is kept).
std::vector<SsmModel> align_charts(const std::vector<SsmModel>& models);

class ParametricSsmModel {
public:
    ParametricSsmModel() = default;
    /// Models must be aligned, share (M_W, M_R) and have strictly increasing mu.
    explicit ParametricSsmModel(std::vector<SsmModel> models);

    const std::vector<double>& knots() const noexcept { return knots_; }
    const std::vector<SsmModel>& models() const noexcept { return models_; }
    int mw() const noexcept { return models_.front().mw(); }
    int mr() const noexcept { return models_.front().mr(); }
    int dimension() const noexcept { return models_.front().dimension(); }
    double lo() const noexcept { return knots_.front(); }
    double hi() const noexcept { return knots_.back(); }
    const NaturalCubicSplines& splines() const noexcept { return splines_; }

    /// Interpolated model; the chart is re-orthonormalized by polar decomposition.
    SsmModel at(double mu) const;
    Eigen::Matrix2d linear_part(double mu) const;

private:
    std::vector<double> knots_;
    std::vector<SsmModel> models_;
    NaturalCubicSplines splines_;
};

ParametricSsmModel interpolate_models(const std::vector<SsmModel>& aligned);

TrajectoryDataset predict_trajectory(const SsmModel& model, const Eigen::VectorXd& x0, double t_end, double dt,
                                     double t0 = 0.0, const IntegratorOptions& options = {});
/// OutOfRange when mu lies outside the knot hull.
TrajectoryDataset predict_trajectory(const ParametricSsmModel& pm, double mu, const Eigen::VectorXd& x0, double t_end,
                                     double dt, double t0 = 0.0, const IntegratorOptions& options = {});

/// Max real part of the eigenvalues of the linear block of R(.; mu).
double leading_growth_rate(const ParametricSsmModel& pm, double mu);
/// Bisection to `tol` on the sign change of leading_growth_rate.
double predict_bifurcation(const ParametricSsmModel& pm, double lo, double hi, double tol = 1e-6);

struct ErrorSummary {
    double nmte = 0;
    double nmae = 0;
    double rec_error = 0;  // NaN when no model was supplied
};

double nmte(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction);
double nmae(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& prediction);
/// NMTE between the data and its projected-then-lifted reconstruction.
double reconstruction_error(const TrajectoryDataset& data, const SsmModel& model);

/// GridMismatch unless both datasets share the time grid.
ErrorSummary metrics(const TrajectoryDataset& truth, const TrajectoryDataset& prediction,
                     const SsmModel* model = nullptr);

nlohmann::json to_json(const SsmModel& model);
SsmModel ssm_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ParametricSsmModel& pm);
ParametricSsmModel parametric_model_from_json(const nlohmann::json& j);

}  // namespace pssm
