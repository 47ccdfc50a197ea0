#include "pssm/systems.hpp"

#include "pssm/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace pssm {

PolyVectorField toy_model_field(const HopfParams& p) {
    p.validate();
    PolyVectorField f(3);
    f.add_term(0, {1, 0, 0}, p.mu);
    f.add_term(0, {0, 1, 0}, -p.omega);
    f.add_term(0, {3, 0, 0}, -1.0);
    f.add_term(0, {1, 2, 0}, -1.0);
    f.add_term(1, {1, 0, 0}, p.omega);
    f.add_term(1, {0, 1, 0}, p.mu);
    f.add_term(1, {2, 1, 0}, -1.0);
    f.add_term(1, {0, 3, 0}, -1.0);
    f.add_term(2, {0, 0, 1}, p.sigma);
    f.add_term(2, {2, 0, 0}, 1.0);
    f.add_term(2, {0, 2, 0}, 1.0);
    return f;
}

ParametricPolyField toy_model_parametric(double omega, double sigma, double mu_default) {
    ParametricPolyField f;
    f.dimension = 3;
    f.degree = 3;
    f.parameter_default = mu_default;
    f.constants = {{"omega", omega}, {"sigma", sigma}};
    auto add = [&](int c, Exponents e, const char* expr) {
        f.entries.push_back({c, std::move(e), CoefficientExpr::parse(expr)});
    };
    add(0, {1, 0, 0}, "mu");
    add(0, {0, 1, 0}, "-omega");
    add(0, {3, 0, 0}, "-1");
    add(0, {1, 2, 0}, "-1");
    add(1, {1, 0, 0}, "omega");
    add(1, {0, 1, 0}, "mu");
    add(1, {2, 1, 0}, "-1");
    add(1, {0, 3, 0}, "-1");
    add(2, {0, 0, 1}, "sigma");
    add(2, {2, 0, 0}, "1");
    add(2, {0, 2, 0}, "1");
    return f;
}

// ---------------------------------------------------------------- surrogate

SurrogateSystem::SurrogateSystem(SurrogateConfig config) : config_(config) {
    const int n = config_.dimension;
    if (n < 3) throw Error(ErrorCode::InvalidArgument, "surrogate dimension must be at least 3");
    if (!(config_.stable_leading < 0) || !(config_.stable_trailing < 0))
        throw Error(ErrorCode::InvalidArgument, "stable eigenvalues must be negative");
    if (config_.alpha_slope <= 0) throw Error(ErrorCode::InvalidArgument, "alpha_slope must be positive");
    if (config_.omega0 <= 0) throw Error(ErrorCode::InvalidArgument, "omega0 must be positive");

    std::mt19937_64 rng(config_.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd G(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Q_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (R(j, j) < 0) Q_.col(j) *= -1.0;

    const int m = n - 2;
    nu_.resize(m);
    b_.resize(m);
    for (int j = 0; j < m; ++j) {
        const double s = m == 1 ? 0.0 : static_cast<double>(j) / (m - 1);
        nu_[j] = config_.stable_leading + s * (config_.stable_trailing - config_.stable_leading);
    }
    for (int j = 0; j < m; ++j) b_[j] = config_.coupling_scale * normal(rng) / std::sqrt(static_cast<double>(m));
}

std::vector<Complex> SurrogateSystem::prescribed_eigenvalues(double mu) const {
    std::vector<Complex> out{{alpha(mu), omega(mu)}, {alpha(mu), -omega(mu)}};
    for (Eigen::Index j = 0; j < nu_.size(); ++j) out.emplace_back(nu_[j], 0.0);
    return out;
}

Eigen::MatrixXd SurrogateSystem::linearize(double mu) const {
    const int n = dimension();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
    B(0, 0) = B(1, 1) = alpha(mu);
    B(0, 1) = -omega(mu);
    B(1, 0) = omega(mu);
    B.diagonal().tail(n - 2) = nu_;
    return Q_ * B * Q_.transpose();
}

void SurrogateSystem::rhs(double mu, const Eigen::VectorXd& x, Eigen::VectorXd& dx) const {
    Eigen::VectorXd y = Q_.transpose() * x;
    const double a = alpha(mu), w = omega(mu);
    const double p1 = y[0], p2 = y[1];
    const double rho = p1 * p1 + p2 * p2;
    const double beta = config_.cubic_damping, gamma = config_.cubic_frequency;
    const double re = a - beta * rho, im = w + gamma * rho;
    y[0] = re * p1 - im * p2;
    y[1] = im * p1 + re * p2;
    y.tail(nu_.size()) = nu_.cwiseProduct(y.tail(nu_.size())) + rho * b_;
    dx.noalias() = Q_ * y;
}

RhsFn SurrogateSystem::rhs_at(double mu) const {
    return [this, mu](const Eigen::VectorXd& x, Eigen::VectorXd& dx) { rhs(mu, x, dx); };
}

double SurrogateSystem::limit_cycle_radius(double mu) const {
    const double a = alpha(mu);
    if (!(a > 0)) throw Error(ErrorCode::WrongRegime, "no limit cycle for alpha <= 0");
    if (!(config_.cubic_damping > 0)) throw Error(ErrorCode::InvalidArgument, "limit cycle needs positive damping");
    return std::sqrt(a / config_.cubic_damping);
}

double SurrogateSystem::pair_radius(const Eigen::VectorXd& x) const {
    return (Q_.leftCols<2>().transpose() * x).norm();
}

EigenCurves SurrogateSystem::curves(double lo, double hi, int samples) const {
    const double nu = nu_.maxCoeff();
    const auto self = std::make_shared<const SurrogateSystem>(*this);
    return EigenCurves::from_functions([self](double mu) { return self->alpha(mu); }, [nu](double) { return nu; }, lo,
                                       hi, samples, [self](double mu) { return self->omega(mu); });
}

// ---------------------------------------------------------------- dispatch

DynamicalSystem::DynamicalSystem(ParametricPolyField field) : model_(std::move(field)) {}
DynamicalSystem::DynamicalSystem(SurrogateSystem surrogate) : model_(std::move(surrogate)) {}

int DynamicalSystem::dimension() const {
    return std::visit([](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, SurrogateSystem>) return m.dimension();
        else return m.dimension;
    }, model_);
}

const SurrogateSystem& DynamicalSystem::surrogate() const {
    if (!is_surrogate()) throw Error(ErrorCode::InvalidArgument, "system is not a surrogate");
    return std::get<SurrogateSystem>(model_);
}

const ParametricPolyField& DynamicalSystem::polynomial() const {
    if (is_surrogate()) throw Error(ErrorCode::InvalidArgument, "system is not polynomial");
    return std::get<ParametricPolyField>(model_);
}

double DynamicalSystem::default_parameter() const {
    return is_surrogate() ? surrogate().config().mu0 : polynomial().parameter_default;
}

Eigen::MatrixXd DynamicalSystem::linearize(double mu) const {
    return is_surrogate() ? surrogate().linearize(mu) : polynomial().at(mu).linear_part();
}

RhsFn DynamicalSystem::rhs_at(double mu) const {
    if (is_surrogate()) return surrogate().rhs_at(mu);
    auto field = std::make_shared<PolyVectorField>(polynomial().at(mu));
    return [field](const Eigen::VectorXd& x, Eigen::VectorXd& dx) { field->evaluate(x, dx); };
}

double DynamicalSystem::alpha(double mu) const {
    if (is_surrogate()) return surrogate().alpha(mu);
    return compute_spectrum(linearize(mu)).alpha();
}

EigenCurves DynamicalSystem::curves(double lo, double hi, int samples) const {
    if (is_surrogate()) return surrogate().curves(lo, hi, samples);
    const auto field = std::make_shared<const ParametricPolyField>(polynomial());
    return EigenCurves::from_matrices([field](double mu) { return field->at(mu).linear_part(); }, lo, hi, samples);
}

// ---------------------------------------------------------------- datasets

void TrajectoryDataset::validate() const {
    if (states.rows() != times.size()) throw Error(ErrorCode::InvalidArgument, "times and states disagree in length");
    if (!states.allFinite()) throw Error(ErrorCode::InvalidArgument, "dataset contains non-finite entries");
    if (fixed_point.size() != states.cols()) throw Error(ErrorCode::InvalidArgument, "fixed point has wrong size");
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "dataset dt must be positive");
    for (Eigen::Index i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - times[i - 1] - dt) > 1e-9 * std::max(1.0, std::abs(times[i])))
            throw Error(ErrorCode::GridMismatch, "dataset time grid is not uniform");
}

namespace {

TrajectoryDataset from_uniform(UniformTrajectory traj, double mu, double dt, const Eigen::VectorXd& x0) {
    TrajectoryDataset d;
    d.mu = mu;
    d.dt = dt;
    d.times = std::move(traj.times);
    d.states = std::move(traj.states);
    d.fixed_point = Eigen::VectorXd::Zero(d.states.cols());
    d.provenance.protocol = "direct";
    d.provenance.initial_condition = x0;
    return d;
}

}  // namespace

TrajectoryDataset integrate(const PolyVectorField& field, const Eigen::VectorXd& x0, double mu, double t_end,
                            double dt, const IntegratorOptions& options) {
    if (x0.size() != field.dimension()) throw Error(ErrorCode::InvalidArgument, "initial state has wrong size");
    auto f = [&field](const Eigen::VectorXd& x, Eigen::VectorXd& dx) { field.evaluate(x, dx); };
    return from_uniform(integrate(f, x0, t_end, dt, options), mu, dt, x0);
}

TrajectoryDataset integrate(const SurrogateSystem& sys, const Eigen::VectorXd& x0, double mu, double t_end,
                            double dt, const IntegratorOptions& options) {
    if (x0.size() != sys.dimension()) throw Error(ErrorCode::InvalidArgument, "initial state has wrong size");
    return from_uniform(integrate(sys.rhs_at(mu), x0, t_end, dt, options), mu, dt, x0);
}

Protocol parse_protocol(const std::string& name) {
    if (name == "pre-bif" || name == "pre") return Protocol::PreBifurcation;
    if (name == "post-bif" || name == "post") return Protocol::PostBifurcation;
    throw Error(ErrorCode::InvalidArgument, "unknown protocol '" + name + "'");
}

std::string to_string(Protocol p) { return p == Protocol::PreBifurcation ? "pre-bif" : "post-bif"; }

TrajectoryDataset generate_training_data(const SurrogateSystem& sys, double mu, Protocol protocol,
                                         std::uint64_t rng_seed, const DataOptions& opt) {
    const double a = sys.alpha(mu);
    const int n = sys.dimension();
    if (protocol == Protocol::PreBifurcation) {
        if (!(a < 0)) throw Error(ErrorCode::WrongRegime, "pre-bif protocol needs alpha(mu) < 0");
        std::mt19937_64 rng(rng_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd dir(n);
        for (int i = 0; i < n; ++i) dir[i] = normal(rng);
        // The magnitude is measured in the bifurcating pair's plane: a random
        // direction in R^N otherwise leaves only ~sqrt(2/N) of it there.
        const double in_plane = opt.pre_scale_in_pair_plane ? sys.pair_radius(dir) : dir.norm();
        if (!(in_plane > 0)) throw Error(ErrorCode::InvalidArgument, "degenerate perturbation direction");
        const Eigen::VectorXd x0 = (opt.pre_perturbation * sys.reference_amplitude() / in_plane) * dir;
        const double t_end = std::min(opt.pre_t_max, std::log(opt.pre_decay) / a);
        auto traj = integrate(sys.rhs_at(mu), x0, t_end, opt.dt, opt.integrator);
        const auto total = traj.states.rows();
        const auto drop = static_cast<Eigen::Index>(std::floor(opt.pre_discard * total));
        TrajectoryDataset d;
        d.mu = mu;
        d.dt = opt.dt;
        d.times = traj.times.tail(total - drop);
        d.states = traj.states.bottomRows(total - drop);
        d.fixed_point = Eigen::VectorXd::Zero(n);
        d.provenance = {"pre-bif", x0, rng_seed, static_cast<int>(drop), opt.pre_discard, true};
        return d;
    }

    if (!(a > 0)) throw Error(ErrorCode::WrongRegime, "post-bif protocol needs alpha(mu) > 0");
    const Eigen::VectorXd x0 = opt.post_perturbation * sys.unstable_direction();
    const double period = 2.0 * std::numbers::pi / sys.omega(mu);
    const auto lag = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(period / opt.dt)));
    std::vector<double> radius{sys.pair_radius(x0)};
    bool settled = false;
    auto observer = [&](double, const Eigen::VectorXd& x) {
        radius.push_back(sys.pair_radius(x));
        if (radius.size() <= lag) return false;
        const double r = radius.back(), r_prev = radius[radius.size() - 1 - lag];
        settled = r > 10.0 * radius.front() && std::abs(r - r_prev) < opt.post_settle_tol * r;
        return settled;
    };
    auto traj = integrate(sys.rhs_at(mu), x0, opt.post_t_max, opt.dt, opt.integrator, observer);
    TrajectoryDataset d = from_uniform(std::move(traj), mu, opt.dt, x0);
    d.provenance = {"post-bif", x0, rng_seed, 0, 0.0, settled};
    return d;
}

}  // namespace pssm
