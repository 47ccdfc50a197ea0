#pragma once

#include "pssm/integrator.hpp"
#include "pssm/normal_form.hpp"
#include "pssm/poly_field.hpp"
#include "pssm/spectra.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>

namespace pssm {

/// The cubic Hopf normal form in (x, y, z).
PolyVectorField toy_model_field(const HopfParams& p);
/// Same model with mu left symbolic (omega and sigma as named constants).
ParametricPolyField toy_model_parametric(double omega, double sigma, double mu_default = -1.0);

struct SurrogateConfig {
    int dimension = 64;
    double mu0 = 8015.0;
    double omega0 = 2.83;
    double alpha_slope = 5e-4;  // alpha(mu) = alpha_slope (mu - mu0)
    double omega_slope = 1e-4;  // omega(mu) = omega0 + omega_slope (mu - mu0)
    double cubic_damping = 1.0;  // beta in p' = A_u p - beta |p|^2 p + gamma |p|^2 J p
    double cubic_frequency = 0.05;
    double coupling_scale = 1.0;  // norm scale of the |p|^2 feed into the stable modes
    double stable_leading = -3.0;
    double stable_trailing = -8.0;
    double reference_offset = 300.0;
    std::uint64_t seed = 7;
};

/// N-dimensional polynomial system with a prescribed parameter-dependent
/// spectrum. In hidden coordinates y = Q^T x, y = (p, s):
///   p' = A_u(mu) p - beta |p|^2 p + gamma |p|^2 J p
///   s_j' = nu_j s_j + b_j |p|^2
class SurrogateSystem {
public:
    explicit SurrogateSystem(SurrogateConfig config = {});

    const SurrogateConfig& config() const noexcept { return config_; }
    int dimension() const noexcept { return config_.dimension; }

    double alpha(double mu) const { return config_.alpha_slope * (mu - config_.mu0); }
    double omega(double mu) const { return config_.omega0 + config_.omega_slope * (mu - config_.mu0); }
    const Eigen::VectorXd& stable_eigenvalues() const noexcept { return nu_; }
    const Eigen::VectorXd& couplings() const noexcept { return b_; }
    const Eigen::MatrixXd& mixing() const noexcept { return Q_; }
    bool is_linear() const noexcept {
        return config_.cubic_damping == 0 && config_.cubic_frequency == 0 && b_.isZero(0);
    }

    std::vector<Complex> prescribed_eigenvalues(double mu) const;
    Eigen::MatrixXd linearize(double mu) const;
    void rhs(double mu, const Eigen::VectorXd& x, Eigen::VectorXd& dx) const;
    RhsFn rhs_at(double mu) const;

    /// Pair-plane radius sqrt(alpha / beta) of the limit cycle; requires alpha > 0.
    double limit_cycle_radius(double mu) const;
    /// Limit-cycle radius at mu0 + reference_offset.
    double reference_amplitude() const { return limit_cycle_radius(config_.mu0 + config_.reference_offset); }
    /// Real part of the unstable eigenvector, unit length.
    Eigen::VectorXd unstable_direction() const { return Q_.col(0); }
    /// |p| of a state.
    double pair_radius(const Eigen::VectorXd& x) const;

    EigenCurves curves(double lo, double hi, int samples = 401) const;

private:
    SurrogateConfig config_;
    Eigen::MatrixXd Q_;
    Eigen::VectorXd nu_, b_;
};

/// A system loaded from a spec file: either a parametric polynomial field or
/// a surrogate.
class DynamicalSystem {
public:
    DynamicalSystem(ParametricPolyField field);
    DynamicalSystem(SurrogateSystem surrogate);

    int dimension() const;
    bool is_surrogate() const noexcept { return std::holds_alternative<SurrogateSystem>(model_); }
    const SurrogateSystem& surrogate() const;
    const ParametricPolyField& polynomial() const;
    double default_parameter() const;

    Eigen::MatrixXd linearize(double mu) const;
    RhsFn rhs_at(double mu) const;
    /// Leading-pair real part at mu.
    double alpha(double mu) const;
    EigenCurves curves(double lo, double hi, int samples = 201) const;

private:
    std::variant<ParametricPolyField, SurrogateSystem> model_;
};

/// Text system spec: see configs/ for examples.
DynamicalSystem load_system_spec(const std::string& path);
DynamicalSystem parse_system_spec(const std::string& text);

struct Provenance {
    std::string protocol;  // "pre-bif", "post-bif" or "direct"
    Eigen::VectorXd initial_condition;
    std::uint64_t seed = 0;
    int discarded_rows = 0;
    double discarded_fraction = 0;
    bool settled = true;
};

/// Snapshots on a uniform grid, states centered on the fixed point.
struct TrajectoryDataset {
    double mu = 0;
    double dt = 0;
    Eigen::VectorXd times;
    Eigen::MatrixXd states;
    Eigen::VectorXd fixed_point;
    Provenance provenance;

    Eigen::Index rows() const noexcept { return states.rows(); }
    Eigen::Index dimension() const noexcept { return states.cols(); }
    void validate() const;
};

TrajectoryDataset integrate(const PolyVectorField& field, const Eigen::VectorXd& x0, double mu, double t_end,
                            double dt, const IntegratorOptions& options = {});
TrajectoryDataset integrate(const SurrogateSystem& sys, const Eigen::VectorXd& x0, double mu, double t_end,
                            double dt, const IntegratorOptions& options = {});

enum class Protocol { PreBifurcation, PostBifurcation };
Protocol parse_protocol(const std::string& name);
std::string to_string(Protocol p);

struct DataOptions {
    double dt = 0.04;
    double pre_perturbation = 0.1;  // times the reference amplitude
    bool pre_scale_in_pair_plane = true;  // measure the perturbation by its pair-plane component
    double pre_discard = 0.1;
    double pre_decay = 0.05;        // pre-bif runs until e^{alpha t} reaches this
    double pre_t_max = 4000;
    double post_perturbation = 1e-4;
    double post_settle_tol = 1e-4;  // relative radius change per period
    double post_t_max = 20000;
    IntegratorOptions integrator;
};

TrajectoryDataset generate_training_data(const SurrogateSystem& sys, double mu, Protocol protocol,
                                         std::uint64_t rng_seed, const DataOptions& options = {});

}  // namespace pssm
