#pragma once

#include <string>
#include <vector>

namespace pssm {

/// Cubic Hopf normal form with one transverse stable direction:
///   x' = mu x - omega y - x (x^2 + y^2)
///   y' = omega x + mu y - y (x^2 + y^2)
///   z' = sigma z + x^2 + y^2
/// The invariant graph z = h(rho), rho = x^2 + y^2, satisfies
///   sigma h + rho = 2 h'(rho) (mu rho - rho^2).
struct HopfParams {
    double mu = -1.0;
    double omega = 1.0;
    double sigma = -5.0;

    /// sigma / (2 mu)
    double alpha() const { return sigma / (2.0 * mu); }
    void validate() const;
};

/// Taylor coefficients a_1..a_K of the analytic graph h(rho) = sum a_k rho^k.
struct RadialSeries {
    HopfParams params;
    std::vector<double> a;  // a[k-1] = a_k

    int order() const noexcept { return static_cast<int>(a.size()); }
    double coefficient(int k) const { return a.at(static_cast<std::size_t>(k - 1)); }
    /// |a_{K-1} / a_K| for the last two stored coefficients.
    double radius_estimate() const;
    double evaluate(double rho) const;
};

inline constexpr double kResonanceRelTol = 1e-12;

RadialSeries taylor_coefficients(const HopfParams& p, int order);

/// Integrating-factor solution through (rho0, h_at_rho0), quadrature to 1e-10.
double exact_solution(const HopfParams& p, double h_at_rho0, double rho0, double rho);

/// Closed-form binomial series for the particular part h_p (h_p(rho0) = 0),
/// including the log(rho / rho0) term when alpha is a positive integer.
double particular_solution_series(const HopfParams& p, double rho0, double rho, int n_terms = 2000,
                                  bool include_log_term = true);

/// Value of the convergent Taylor series at rho0: pins the analytic branch.
double select_analytic_branch(const HopfParams& p, double rho0);

/// Closed form of rho' = 2 mu rho - 2 rho^2.
double radial_flow(const HopfParams& p, double rho0, double t);

bool is_positive_integer(double alpha);

struct RegularityClass {
    enum class Kind { Analytic, Hoelder, LogResonant };
    Kind kind = Kind::Analytic;
    /// Class in rho: C^{integer_part, exponent}; log-resonant uses exponent
    /// delta < 1 (reported as NaN since any delta < 1 works).
    int integer_part = 0;
    double exponent = 0;
    /// The same class in (x, y): indices doubled / 2 k0 - 1.
    int xy_integer_part = 0;
    double xy_exponent = 0;
    int k0 = 0;
    bool analytic_branch_exists = true;
    /// 2 alpha is an integer while alpha is not: exponent reported as 0.
    bool boundary_case = false;

    std::string describe() const;
};

RegularityClass classify_regularity(const HopfParams& p);

/// One solution branch of the graph equation, identified by h(rho0).
struct ToyBranch {
    HopfParams params;
    double rho0 = 0.1;
    double h_at_rho0 = 0;

    double operator()(double rho) const { return exact_solution(params, h_at_rho0, rho0, rho); }
    /// z of the graph over (x, y).
    double z(double x, double y) const { return (*this)(x * x + y * y); }
};

struct CrossSectionPoint {
    double x;
    double z;
};

/// y = 0 cross-section of one branch on x in +-[x_min, x_max].
std::vector<CrossSectionPoint> cross_section(const ToyBranch& branch, double x_min, double x_max, int points);

}  // namespace pssm
