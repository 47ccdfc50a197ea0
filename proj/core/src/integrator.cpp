#include "pssm/integrator.hpp"

#include "pssm/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace pssm {

namespace {

class Rk4Stepper {
public:
    Rk4Stepper(const RhsFn& f, Eigen::Index n) : f_(f), k2_(n), k3_(n), k4_(n), tmp_(n) {}

    void step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx, double h, Eigen::VectorXd& out) {
        tmp_.noalias() = x + 0.5 * h * dx;
        f_(tmp_, k2_);
        tmp_.noalias() = x + 0.5 * h * k2_;
        f_(tmp_, k3_);
        tmp_.noalias() = x + h * k3_;
        f_(tmp_, k4_);
        out.noalias() = x + (h / 6.0) * (dx + 2.0 * k2_ + 2.0 * k3_ + k4_);
    }

    void derivative(const Eigen::VectorXd& x, Eigen::VectorXd& dx) { f_(x, dx); }

private:
    const RhsFn& f_;
    Eigen::VectorXd k2_, k3_, k4_, tmp_;
};

}  // namespace

UniformTrajectory integrate(const RhsFn& f, const Eigen::VectorXd& x0, double t_end, double dt,
                            const IntegratorOptions& opt, const SampleObserver& observer, double t0) {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
    if (!(t_end - t0 >= dt * (1 - 1e-12))) throw Error(ErrorCode::InvalidArgument, "t_end must be at least one step");
    if (!x0.allFinite()) throw Error(ErrorCode::InvalidArgument, "initial state is not finite");

    const auto n_steps = static_cast<Eigen::Index>(std::floor((t_end - t0) / dt * (1 + 1e-12)));
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(static_cast<std::size_t>(std::min<Eigen::Index>(n_steps + 1, 1 << 20)));
    samples.push_back(x0);

    Rk4Stepper rk(f, n);
    Eigen::VectorXd x = x0, dx(n), full(n), half(n), mid(n), dmid(n);
    double h = dt;
    long steps = 0;
    bool stopped = false;

    for (Eigen::Index i = 1; i <= n_steps && !stopped; ++i) {
        double t = t0 + (i - 1) * dt;
        const double target = t0 + i * dt;
        while (t < target) {
            const double remaining = target - t;
            const bool last = h >= remaining * (1 - 1e-12);
            const double step = last ? remaining : h;
            rk.derivative(x, dx);
            rk.step(x, dx, step, full);
            rk.step(x, dx, 0.5 * step, mid);
            rk.derivative(mid, dmid);
            rk.step(mid, dmid, 0.5 * step, half);

            double err = 0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double scale = opt.atol + opt.rtol * std::max(std::abs(x[j]), std::abs(half[j]));
                err = std::max(err, std::abs(half[j] - full[j]) / 15.0 / scale);
            }
            if (!std::isfinite(err)) throw Error(ErrorCode::BlowUp, "non-finite state during integration");
            const double factor = err == 0 ? 4.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 4.0);
            if (err <= 1.0) {
                x = half + (half - full) / 15.0;
                t = last ? target : t + step;
                if (!last || factor < 1.0) h = step * factor;
                else h = std::max(h, step * factor);
                if (x.norm() > opt.blowup_norm) {
                    std::ostringstream msg;
                    msg << "state norm " << x.norm() << " at t = " << t;
                    throw Error(ErrorCode::BlowUp, msg.str());
                }
            } else {
                h = step * factor;
            }
            if (++steps > opt.max_steps) throw Error(ErrorCode::InvalidArgument, "step limit exceeded");
            if (h < 1e-14 * std::max(1.0, std::abs(t))) throw Error(ErrorCode::BlowUp, "step size underflow");
        }
        samples.push_back(x);
        if (observer && observer(target, x)) stopped = true;
    }

    UniformTrajectory out;
    const auto rows = static_cast<Eigen::Index>(samples.size());
    out.times.resize(rows);
    out.states.resize(rows, n);
    for (Eigen::Index i = 0; i < rows; ++i) {
        out.times[i] = t0 + i * dt;
        out.states.row(i) = samples[static_cast<std::size_t>(i)].transpose();
    }
    return out;
}

}  // namespace pssm
