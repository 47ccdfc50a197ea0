#include "pssm/normal_form.hpp"

#include "pssm/error.hpp"
#include "pssm/quadrature.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pssm {

void HopfParams::validate() const {
    if (!(sigma < 0)) throw Error(ErrorCode::InvalidArgument, "sigma must be negative");
    if (omega == 0.0) throw Error(ErrorCode::InvalidArgument, "omega must be nonzero");
}

bool is_positive_integer(double alpha) {
    const double r = std::round(alpha);
    return r >= 1.0 && std::abs(alpha - r) <= kResonanceRelTol * std::max(1.0, std::abs(alpha));
}

double RadialSeries::radius_estimate() const {
    if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "radius estimate needs two coefficients");
    return std::abs(a[a.size() - 2] / a.back());
}

double RadialSeries::evaluate(double rho) const {
    double sum = 0;
    for (std::size_t k = a.size(); k-- > 0;) sum = (sum + a[k]) * rho;
    return sum;
}

RadialSeries taylor_coefficients(const HopfParams& p, int order) {
    p.validate();
    if (order < 1) throw Error(ErrorCode::InvalidArgument, "order must be positive");
    RadialSeries s;
    s.params = p;
    s.a.reserve(static_cast<std::size_t>(order));
    for (int k = 1; k <= order; ++k) {
        const double denom = 2.0 * k * p.mu - p.sigma;
        if (std::abs(denom) <= kResonanceRelTol * std::abs(p.sigma)) {
            std::ostringstream msg;
            msg << "2 k mu = sigma at k = " << k;
            throw ResonantCoefficientError(k, msg.str());
        }
        s.a.push_back(k == 1 ? 1.0 / denom : 2.0 * (k - 1) / denom * s.a.back());
    }
    return s;
}

namespace {

// log of (|mu| - sign(mu) rho) / rho, the base of the integrating factor.
double log_factor_base(const HopfParams& p, double rho) {
    const double top = std::abs(p.mu) - (p.mu > 0 ? rho : -rho);
    return std::log(top) - std::log(rho);
}

void check_domain(const HopfParams& p, double rho) {
    if (p.mu == 0.0) throw Error(ErrorCode::DomainViolation, "mu = 0 has no integrating-factor solution");
    if (!(rho > 0)) throw Error(ErrorCode::DomainViolation, "rho must be positive");
    if (p.mu > 0 && !(rho < p.mu)) throw Error(ErrorCode::DomainViolation, "post-bifurcation solutions need rho < mu");
}

}  // namespace

double exact_solution(const HopfParams& p, double h_at_rho0, double rho0, double rho) {
    p.validate();
    check_domain(p, rho0);
    check_domain(p, rho);
    if (rho == rho0) return h_at_rho0;
    const double alpha = p.alpha();
    const double log_m_rho = log_factor_base(p, rho);
    // integrand M(s) / (2 (mu - s)) scaled by M(rho)^{-1}, in t = log s
    auto integrand = [&](double t) {
        const double s = std::exp(t);
        return std::exp(alpha * (log_factor_base(p, s) - log_m_rho)) * s / (2.0 * (p.mu - s));
    };
    const auto q = integrate_adaptive(integrand, std::log(rho0), std::log(rho), 1e-14, 400, 1e-13);
    const double homogeneous = std::exp(alpha * (log_factor_base(p, rho0) - log_m_rho)) * h_at_rho0;
    return homogeneous + q.value;
}

double particular_solution_series(const HopfParams& p, double rho0, double rho, int n_terms, bool include_log_term) {
    p.validate();
    check_domain(p, rho0);
    check_domain(p, rho);
    const double m = std::abs(p.mu);
    if (p.mu < 0 && !(rho < m && rho0 < m))
        throw Error(ErrorCode::DomainViolation, "binomial series needs rho, rho0 < |mu|");
    const double alpha = p.alpha();
    const bool resonant = is_positive_integer(alpha);
    const double k_log = resonant ? std::round(alpha) - 1.0 : -1.0;

    double sum = 0.0, binom = 1.0, last = 0.0;
    const double x = rho / m, x0 = rho0 / m;
    for (int k = 0; k < n_terms; ++k) {
        if (k > 0) binom *= (alpha - 1.0 - (k - 1)) / k;
        if (resonant && k == static_cast<int>(k_log)) {
            last = 0.0;
            continue;
        }
        const double e = k - alpha + 1.0;
        const double sign = (p.mu > 0 && k % 2 == 1) ? -1.0 : 1.0;
        last = sign * binom / e * (std::pow(x, e) - std::pow(x0, e));
        sum += last;
        if (binom == 0.0) break;
    }
    if (std::abs(last) >= 1e-10) {
        std::ostringstream msg;
        msg << "last series term " << last << " after " << n_terms << " terms";
        throw Error(ErrorCode::SeriesNotConverged, msg.str());
    }
    if (p.mu < 0) {
        if (resonant && include_log_term) sum += std::log(rho / rho0);
        return -0.5 * std::pow(rho / (rho + m), alpha) * sum;
    }
    return 0.5 * std::pow(rho / (m - rho), alpha) * sum;
}

double select_analytic_branch(const HopfParams& p, double rho0) {
    p.validate();
    if (is_positive_integer(p.alpha()) && p.mu < 0)
        throw ResonantCoefficientError(static_cast<int>(std::round(p.alpha())), "alpha is a positive integer");
    if (rho0 < 0 || !(rho0 < std::abs(p.mu)))
        throw Error(ErrorCode::DomainViolation, "analytic branch series needs 0 <= rho0 < |mu|");
    if (rho0 == 0.0) return 0.0;
    double a = 1.0 / (2.0 * p.mu - p.sigma);
    double term = a * rho0;
    double sum = term;
    for (int k = 2; k < 1000000; ++k) {
        const double denom = 2.0 * k * p.mu - p.sigma;
        if (std::abs(denom) <= kResonanceRelTol * std::abs(p.sigma)) throw ResonantCoefficientError(k, "2 k mu = sigma");
        const double ratio = 2.0 * (k - 1) / denom * rho0;
        term *= ratio;
        sum += term;
        // later ratios approach rho0 / |mu| monotonically, so the larger of the
        // two bounds the geometric tail
        const double q = std::max(std::abs(ratio), rho0 / std::abs(p.mu));
        if (q < 1.0 && std::abs(term) * q / (1.0 - q) < 1e-16 * std::abs(sum) &&
            std::abs(2.0 * k * p.mu) > std::abs(p.sigma))
            return sum;
    }
    throw Error(ErrorCode::SeriesNotConverged, "analytic branch series did not converge");
}

double radial_flow(const HopfParams& p, double rho0, double t) {
    if (p.mu == 0.0) return rho0 / (1.0 + 2.0 * rho0 * t);
    const double e = std::exp(-2.0 * p.mu * t);
    return p.mu * rho0 / (rho0 + (p.mu - rho0) * e);
}

std::string RegularityClass::describe() const {
    std::ostringstream out;
    switch (kind) {
        case Kind::Analytic: out << "analytic"; break;
        case Kind::Hoelder:
            out << "analytic primary branch; fractional branches C^{" << integer_part << "," << exponent << "} in rho, C^{"
                << xy_integer_part << "," << xy_exponent << "} in (x,y)";
            if (boundary_case) out << " (integer 2*alpha boundary case)";
            break;
        case Kind::LogResonant:
            out << "log-resonant k0=" << k0 << ": C^{" << integer_part << ",delta} in rho, C^{" << xy_integer_part
                << ",delta} in (x,y), any delta < 1";
            break;
    }
    return out.str();
}

RegularityClass classify_regularity(const HopfParams& p) {
    p.validate();
    RegularityClass c;
    if (p.mu >= 0) return c;
    const double alpha = p.alpha();
    if (is_positive_integer(alpha)) {
        c.kind = RegularityClass::Kind::LogResonant;
        c.k0 = static_cast<int>(std::round(alpha));
        c.integer_part = c.k0 - 1;
        c.xy_integer_part = 2 * c.k0 - 1;
        c.exponent = c.xy_exponent = std::numeric_limits<double>::quiet_NaN();
        c.analytic_branch_exists = false;
        return c;
    }
    c.kind = RegularityClass::Kind::Hoelder;
    c.integer_part = static_cast<int>(std::floor(alpha));
    c.exponent = alpha - std::floor(alpha);
    const double two = 2.0 * alpha;
    double fl = std::floor(two);
    if (std::abs(two - std::round(two)) <= kResonanceRelTol * std::max(1.0, two)) {
        fl = std::round(two);
        c.boundary_case = true;
    }
    c.xy_integer_part = static_cast<int>(fl);
    c.xy_exponent = c.boundary_case ? 0.0 : two - fl;
    return c;
}

std::vector<CrossSectionPoint> cross_section(const ToyBranch& branch, double x_min, double x_max, int points) {
    if (!(x_min > 0) || !(x_max > x_min) || points < 2) throw Error(ErrorCode::InvalidArgument, "bad cross-section range");
    std::vector<CrossSectionPoint> out;
    out.reserve(static_cast<std::size_t>(2 * points));
    for (int i = points - 1; i >= 0; --i) {
        const double x = x_min + (x_max - x_min) * i / (points - 1);
        out.push_back({-x, branch.z(-x, 0.0)});
    }
    for (int i = 0; i < points; ++i) {
        const double x = x_min + (x_max - x_min) * i / (points - 1);
        out.push_back({x, branch.z(x, 0.0)});
    }
    return out;
}

}  // namespace pssm
