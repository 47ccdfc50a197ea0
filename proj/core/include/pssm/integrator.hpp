#pragma once

#include <Eigen/Dense>

#include <functional>

namespace pssm {

/// dx = f(x) for an autonomous system.
using RhsFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& dx)>;

struct IntegratorOptions {
    double atol = 1e-9;
    double rtol = 1e-9;
    double blowup_norm = 1e6;
    long max_steps = 100'000'000;
};

/// Samples on the uniform grid t0, t0 + dt, ...; one state per row.
struct UniformTrajectory {
    Eigen::VectorXd times;
    Eigen::MatrixXd states;
};

/// Called at each grid sample after the first; returning true stops the run.
using SampleObserver = std::function<bool(double t, const Eigen::VectorXd& x)>;

/// Classical RK4 with step-doubling error control and local extrapolation
/// (fifth order); internal steps are clipped so every grid point is hit
/// exactly. Throws BlowUp when the state norm exceeds options.blowup_norm.
UniformTrajectory integrate(const RhsFn& f, const Eigen::VectorXd& x0, double t_end, double dt,
                            const IntegratorOptions& options = {}, const SampleObserver& observer = nullptr,
                            double t0 = 0.0);

}  // namespace pssm
