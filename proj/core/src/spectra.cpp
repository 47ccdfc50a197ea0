#include "pssm/spectra.hpp"

#include "pssm/error.hpp"
#include "pssm/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace pssm {

namespace {

constexpr double kPairTol = 1e-9;

bool is_real(const Complex& z) { return std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z)); }

// Snaps near-real values to the real axis and conjugate partners to exact
// conjugates; throws when some nonreal eigenvalue has no partner.
void symmetrize_pairs(std::vector<Complex>& ev) {
    std::vector<bool> used(ev.size(), false);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (used[i]) continue;
        if (is_real(ev[i])) {
            ev[i] = {ev[i].real(), 0.0};
            used[i] = true;
            continue;
        }
        std::size_t best = ev.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ev.size(); ++j) {
            if (j == i || used[j]) continue;
            const double d = std::abs(ev[j] - std::conj(ev[i]));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best == ev.size() || best_d > kPairTol * std::max(1.0, std::abs(ev[i])))
            throw Error(ErrorCode::NoConjugatePair, "eigenvalue without complex-conjugate partner");
        const double re = 0.5 * (ev[i].real() + ev[best].real());
        const double im = 0.5 * (std::abs(ev[i].imag()) + std::abs(ev[best].imag()));
        ev[i] = {re, ev[i].imag() > 0 ? im : -im};
        ev[best] = std::conj(ev[i]);
        used[i] = used[best] = true;
    }
}

}  // namespace

std::vector<int> Spectrum::outer_indices() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(eigenvalues.size()); ++i)
        if (i != subspace[0] && i != subspace[1]) out.push_back(i);
    return out;
}

std::optional<double> Spectrum::leading_outer_real() const {
    for (int i : outer_indices())
        if (eigenvalues[static_cast<std::size_t>(i)].imag() == 0.0) return eigenvalues[static_cast<std::size_t>(i)].real();
    return std::nullopt;
}

Spectrum make_spectrum(std::vector<Complex> eigenvalues, const SubspaceRule& rule) {
    if (eigenvalues.size() < 2) throw Error(ErrorCode::InvalidArgument, "spectrum needs at least two eigenvalues");
    symmetrize_pairs(eigenvalues);
    std::stable_sort(eigenvalues.begin(), eigenvalues.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });

    Spectrum s;
    s.eigenvalues = std::move(eigenvalues);
    if (std::holds_alternative<LeadingPair>(rule)) {
        if (s.eigenvalues[0].imag() == 0.0 || s.eigenvalues[1] != std::conj(s.eigenvalues[0]))
            throw Error(ErrorCode::NoConjugatePair, "the leading eigenvalue is real; no leading conjugate pair");
        s.subspace = {0, 1};
    } else {
        auto idx = std::get<std::array<int, 2>>(rule);
        const int n = static_cast<int>(s.eigenvalues.size());
        if (idx[0] < 0 || idx[1] < 0 || idx[0] >= n || idx[1] >= n || idx[0] == idx[1])
            throw Error(ErrorCode::InvalidArgument, "subspace indices out of range");
        const Complex a = s.eigenvalues[static_cast<std::size_t>(idx[0])];
        const Complex b = s.eigenvalues[static_cast<std::size_t>(idx[1])];
        if (a.imag() == 0.0 || b != std::conj(a))
            throw Error(ErrorCode::NoConjugatePair, "selected eigenvalues are not a complex-conjugate pair");
        if (a.imag() < 0) std::swap(idx[0], idx[1]);
        s.subspace = idx;
    }
    return s;
}

Spectrum compute_spectrum(const Eigen::MatrixXd& A, const SubspaceRule& rule) {
    if (A.rows() != A.cols() || A.rows() == 0) throw Error(ErrorCode::NonSquare, "matrix must be square and nonempty");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "eigenvalue computation failed");
    const Eigen::VectorXcd& ev = solver.eigenvalues();
    return make_spectrum(std::vector<Complex>(ev.data(), ev.data() + ev.size()), rule);
}

int spectral_quotient(const Spectrum& s) {
    for (const auto& z : s.eigenvalues)
        if (z.real() >= 0.0) throw Error(ErrorCode::UnstableSpectrum, "spectral quotient needs Re lambda < 0");
    const double ratio = s.eigenvalues.back().real() / s.eigenvalues.front().real();
    return static_cast<int>(std::floor(ratio * (1.0 + 1e-12))) + 1;
}

namespace {

std::vector<ResonanceHit> scan_resonances(const Spectrum& s, int max_order, double lo_tol, double hi_tol,
                                          bool include_lo) {
    std::vector<ResonanceHit> out;
    const Complex l1 = s.lambda1(), l2 = s.lambda2();
    const auto outer = s.outer_indices();
    for (int order = 2; order <= max_order; ++order) {
        for (int m1 = order; m1 >= 0; --m1) {
            const int m2 = order - m1;
            const Complex combo = static_cast<double>(m1) * l1 + static_cast<double>(m2) * l2;
            for (int l : outer) {
                const Complex lam = s.eigenvalues[static_cast<std::size_t>(l)];
                const double gap = std::abs(lam - combo) / std::abs(lam);
                const bool above_lo = include_lo ? true : gap > lo_tol;
                if (above_lo && gap <= hi_tol) out.push_back({m1, m2, l, gap});
            }
        }
    }
    return out;
}

}  // namespace

std::vector<ResonanceHit> check_nonresonance(const Spectrum& s, int max_order, double tol) {
    if (max_order < 2) throw Error(ErrorCode::InvalidArgument, "max_order must be at least 2");
    if (!(tol > 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    return scan_resonances(s, max_order, 0.0, tol, true);
}

std::vector<ResonanceHit> near_resonances(const Spectrum& s, int max_order, double tol, double warn_tol) {
    if (max_order < 2) throw Error(ErrorCode::InvalidArgument, "max_order must be at least 2");
    return scan_resonances(s, max_order, tol, warn_tol, false);
}

// ---------------------------------------------------------------------------

EigenCurves EigenCurves::from_functions(Scalar alpha, Scalar nu, double lo, double hi, int samples, Scalar omega) {
    if (!(hi > lo) || samples < 2) throw Error(ErrorCode::InvalidArgument, "curve interval must be nonempty");
    EigenCurves c;
    c.alpha_ = std::move(alpha);
    c.nu_ = std::move(nu);
    c.omega_ = std::move(omega);
    c.lo_ = lo;
    c.hi_ = hi;
    c.grid_.resize(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) c.grid_[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (samples - 1);
    return c;
}

namespace {

struct TrackedSample {
    double mu;
    Complex pair;  // member with positive imaginary part
    Complex nu;
};

std::vector<Complex> sorted_eigenvalues(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw Error(ErrorCode::NonSquare, "matrix must be square");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
    const Eigen::VectorXcd& ev = solver.eigenvalues();
    std::vector<Complex> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return out;
}

// Index of the eigenvalue nearest to target and whether the match is
// unambiguous (distance below half the gap to the other eigenvalues).
std::pair<std::size_t, bool> nearest(const std::vector<Complex>& ev, Complex target, std::size_t exclude = SIZE_MAX) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ev.size(); ++j) {
        if (j == exclude) continue;
        const double d = std::abs(ev[j] - target);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ev.size(); ++j)
        if (j != best && j != exclude) gap = std::min(gap, std::abs(ev[j] - ev[best]));
    return {best, best_d <= 0.5 * gap};
}

struct Tracker {
    std::function<Eigen::MatrixXd(double)> matrix;
    std::vector<TrackedSample> samples;  // sorted by mu

    TrackedSample match(double mu, const TrackedSample& ref, bool* ambiguous) const {
        const auto ev = sorted_eigenvalues(matrix(mu));
        auto [ip, ok_p] = nearest(ev, ref.pair);
        // conjugate partner of the pair must not be taken as nu
        std::size_t partner = ev.size();
        for (std::size_t j = 0; j < ev.size(); ++j)
            if (j != ip && std::abs(ev[j] - std::conj(ev[ip])) <= 1e-9 * std::max(1.0, std::abs(ev[ip]))) partner = j;
        std::vector<Complex> rest;
        for (std::size_t j = 0; j < ev.size(); ++j)
            if (j != ip && j != partner) rest.push_back(ev[j]);
        auto [in, ok_n] = nearest(rest, ref.nu);
        if (ambiguous) *ambiguous = !(ok_p && ok_n);
        Complex pair = ev[ip];
        if (pair.imag() < 0) pair = std::conj(pair);
        return {mu, pair, rest[in]};
    }

    const TrackedSample& closest(double mu) const {
        auto it = std::lower_bound(samples.begin(), samples.end(), mu,
                                   [](const TrackedSample& s, double v) { return s.mu < v; });
        if (it == samples.end()) return samples.back();
        if (it == samples.begin()) return *it;
        auto prev = std::prev(it);
        return (mu - prev->mu <= it->mu - mu) ? *prev : *it;
    }

    TrackedSample at(double mu) const { return match(mu, closest(mu), nullptr); }
};

}  // namespace

EigenCurves EigenCurves::from_matrices(std::function<Eigen::MatrixXd(double)> matrix, double lo, double hi,
                                       int samples) {
    if (!(hi > lo) || samples < 2) throw Error(ErrorCode::InvalidArgument, "curve interval must be nonempty");
    auto tracker = std::make_shared<Tracker>();
    tracker->matrix = std::move(matrix);

    EigenCurves c;
    c.lo_ = lo;
    c.hi_ = hi;

    const Spectrum first = make_spectrum(sorted_eigenvalues(tracker->matrix(lo)));
    const auto nu0 = first.leading_outer_real();
    if (!nu0) throw Error(ErrorCode::InvalidArgument, "no real eigenvalue outside the leading pair");
    tracker->samples.push_back({lo, first.lambda1(), Complex(*nu0, 0.0)});

    constexpr int kMaxRefine = 8;
    for (int i = 1; i < samples; ++i) {
        const double target = lo + (hi - lo) * i / (samples - 1);
        // advance from the last accepted sample, halving the step on ambiguity
        while (tracker->samples.back().mu < target) {
            const TrackedSample& prev = tracker->samples.back();
            double step = target - prev.mu;
            bool ambiguous = true;
            TrackedSample next{};
            for (int refine = 0; refine <= kMaxRefine; ++refine) {
                next = tracker->match(prev.mu + step, prev, &ambiguous);
                if (!ambiguous) break;
                if (refine < kMaxRefine) step *= 0.5;
            }
            if (ambiguous) {
                std::ostringstream msg;
                msg << "ambiguous eigenvalue matching near mu=" << next.mu << "; continuing with nearest neighbour";
                c.diagnostics_.push_back(msg.str());
            }
            if (next.nu.imag() != 0.0 && (c.diagnostics_.empty() || c.diagnostics_.back().find("complex") == std::string::npos)) {
                std::ostringstream msg;
                msg << "tracked outer eigenvalue is complex at mu=" << next.mu;
                c.diagnostics_.push_back(msg.str());
            }
            tracker->samples.push_back(next);
        }
    }
    for (const auto& s : tracker->samples) c.grid_.push_back(s.mu);
    c.alpha_ = [tracker](double mu) { return tracker->at(mu).pair.real(); };
    c.omega_ = [tracker](double mu) { return tracker->at(mu).pair.imag(); };
    c.nu_ = [tracker](double mu) { return tracker->at(mu).nu.real(); };
    return c;
}

EigenCurves EigenCurves::from_table(const std::vector<double>& mu, const std::vector<double>& alpha,
                                    const std::vector<double>& omega, const std::vector<double>& nu) {
    const std::size_t n = mu.size();
    if (n < 2 || alpha.size() != n || omega.size() != n || nu.size() != n)
        throw Error(ErrorCode::InvalidArgument, "curve table columns must have equal length >= 2");
    Eigen::MatrixXd values(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        values(r, 0) = alpha[i];
        values(r, 1) = omega[i];
        values(r, 2) = nu[i];
    }
    auto splines = std::make_shared<NaturalCubicSplines>(mu, values);
    EigenCurves c;
    c.lo_ = mu.front();
    c.hi_ = mu.back();
    c.grid_ = mu;
    c.alpha_ = [splines](double x) { return (*splines)(x)(0); };
    c.omega_ = [splines](double x) { return (*splines)(x)(1); };
    c.nu_ = [splines](double x) { return (*splines)(x)(2); };
    return c;
}

// ---------------------------------------------------------------------------

namespace {

template <typename F>
double bisect(F&& f, double a, double b, double fa, double tol) {
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0) == (fa < 0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
        if (b - a <= tol && std::min(std::abs(fa), std::abs(fb)) <= tol) break;
    }
    return std::abs(fa) <= std::abs(fb) ? a : b;
}

}  // namespace

double locate_bifurcation(const EigenCurves& curves, double tol) {
    const auto& g = curves.grid();
    double prev = curves.alpha(g.front());
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double cur = curves.alpha(g[i]);
        if (prev < 0.0 && cur >= 0.0)
            return bisect([&](double mu) { return curves.alpha(mu); }, g[i - 1], g[i], prev, tol);
        prev = cur;
    }
    throw Error(ErrorCode::NoBifurcationInRange, "alpha(mu) does not change sign from negative to positive");
}

BifurcationExpansion estimate_expansion(const EigenCurves& curves, double mu0) {
    BifurcationExpansion e;
    e.mu0 = mu0;
    const double span = mu0 - curves.lo();
    if (!(span > 0)) return e;

    // one decade of offsets close to mu0 on the pre-bifurcation side
    constexpr int kPoints = 16;
    const double d_lo = 1e-3 * span, d_hi = 1e-2 * span;
    Eigen::VectorXd logd(kPoints), loga(kPoints), delta(kPoints), alpha(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        const double d = d_lo * std::pow(d_hi / d_lo, static_cast<double>(i) / (kPoints - 1));
        const double a = curves.alpha(mu0 - d);
        if (!(a < 0)) return e;
        delta(i) = d;
        alpha(i) = a;
        logd(i) = std::log(d);
        loga(i) = std::log(-a);
    }
    const double mx = logd.mean(), my = loga.mean();
    const double slope = ((logd.array() - mx) * (loga.array() - my)).sum() / (logd.array() - mx).square().sum();
    e.p = std::max(1, static_cast<int>(std::lround(slope)));

    // alpha / delta^p = a + c1 delta + c2 delta^2, intercept gives a
    Eigen::MatrixXd design(kPoints, 3);
    Eigen::VectorXd rhs(kPoints);
    for (int i = 0; i < kPoints; ++i) {
        const double t = delta(i) / d_hi;
        design(i, 0) = 1.0;
        design(i, 1) = t;
        design(i, 2) = t * t;
        rhs(i) = alpha(i) / std::pow(delta(i), e.p);
    }
    const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);
    e.a = coef(0);
    e.nu0 = curves.nu(mu0);
    e.valid = e.a < 0 && e.nu0 < 0;
    return e;
}

double asymptotic_resonance_estimate(double nu0, double a, int p, double mu0, int m) {
    if (!(nu0 < 0)) throw Error(ErrorCode::SignViolation, "nu0 must be negative");
    if (!(a < 0)) throw Error(ErrorCode::SignViolation, "a must be negative");
    if (p < 1 || m < 1) throw Error(ErrorCode::InvalidArgument, "p and m must be positive");
    return mu0 - std::pow(nu0 / (2.0 * a * m), 1.0 / p);
}

ResonanceScan locate_resonances(const EigenCurves& curves, const std::vector<int>& m_values, double root_tol) {
    for (int m : m_values)
        if (m < 1) throw Error(ErrorCode::InvalidArgument, "resonance index m must be positive");
    ResonanceScan scan;
    const double mu0 = locate_bifurcation(curves, root_tol);
    scan.expansion = estimate_expansion(curves, mu0);
    if (!scan.expansion.valid) scan.diagnostics.push_back("asymptotic expansion could not be estimated");

    const auto& g = curves.grid();
    std::vector<double> alpha(g.size()), nu(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        alpha[i] = curves.alpha(g[i]);
        nu[i] = curves.nu(g[i]);
        if (g[i] <= mu0 && !(nu[i] < 0)) {
            std::ostringstream msg;
            msg << "nu(mu) >= 0 at mu=" << g[i];
            scan.diagnostics.push_back(msg.str());
        }
    }

    for (int m : m_values) {
        const double order = 2.0 * m;
        auto H = [&](double mu) { return curves.nu(mu) - order * curves.alpha(mu); };
        bool found = false;
        for (std::size_t i = 0; i + 1 < g.size(); ++i) {
            const double h0 = nu[i] - order * alpha[i];
            const double h1 = nu[i + 1] - order * alpha[i + 1];
            // a root on an interior grid point is reported by the interval ending there
            if (h0 == 0.0 && i > 0) continue;
            if (!(h0 == 0.0 || h1 == 0.0 || (h0 < 0) != (h1 < 0))) continue;
            const double loc = bisect(H, g[i], g[i + 1], h0, root_tol);
            ResonanceReport r;
            r.order = 2 * m;
            r.location = loc;
            r.residual = std::abs(H(loc));
            r.asymptotic_estimate = scan.expansion.valid
                                        ? asymptotic_resonance_estimate(scan.expansion.nu0, scan.expansion.a,
                                                                        scan.expansion.p, mu0, m)
                                        : std::numeric_limits<double>::quiet_NaN();
            if (loc >= mu0) continue;  // resonances sit strictly before the bifurcation
            scan.reports.push_back(r);
            found = true;
        }
        if (!found) {
            scan.unbracketed.push_back(m);
            std::ostringstream msg;
            msg << "NoRootBracket: no resonance of order " << 2 * m << " in [" << curves.lo() << ", " << curves.hi() << "]";
            scan.diagnostics.push_back(msg.str());
        }
    }
    std::sort(scan.reports.begin(), scan.reports.end(), [](const ResonanceReport& a, const ResonanceReport& b) {
        if (a.order != b.order) return a.order < b.order;
        return a.location < b.location;
    });
    return scan;
}

}  // namespace pssm
