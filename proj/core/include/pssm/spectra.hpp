#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pssm {

using Complex = std::complex<double>;

/// Eigenvalues of a real linearization, sorted by nonincreasing real part
/// (ties broken by larger imaginary part first), with the two indices of the
/// conjugate pair spanning the 2D spectral subspace. subspace[0] is the member
/// with positive imaginary part.
struct Spectrum {
    std::vector<Complex> eigenvalues;
    std::array<int, 2> subspace{0, 1};

    double alpha() const { return eigenvalues[static_cast<std::size_t>(subspace[0])].real(); }
    double omega() const { return eigenvalues[static_cast<std::size_t>(subspace[0])].imag(); }
    Complex lambda1() const { return eigenvalues[static_cast<std::size_t>(subspace[0])]; }
    Complex lambda2() const { return eigenvalues[static_cast<std::size_t>(subspace[1])]; }
    /// Indices of the eigenvalues outside the spectral subspace.
    std::vector<int> outer_indices() const;
    /// Largest real eigenvalue outside the subspace, if any.
    std::optional<double> leading_outer_real() const;
};

struct LeadingPair {};
using SubspaceRule = std::variant<LeadingPair, std::array<int, 2>>;

/// Sorts and validates an eigenvalue list and selects the subspace per rule.
Spectrum make_spectrum(std::vector<Complex> eigenvalues, const SubspaceRule& rule = LeadingPair{});
/// Eigenvalues of a real square matrix via a dense eigensolver.
Spectrum compute_spectrum(const Eigen::MatrixXd& A, const SubspaceRule& rule = LeadingPair{});

/// floor(Re lambda_N / Re lambda_1) + 1 for a strictly stable spectrum.
int spectral_quotient(const Spectrum& s);

struct ResonanceHit {
    int m1 = 0;
    int m2 = 0;
    int outer = 0;           // index into Spectrum::eigenvalues
    double relative_gap = 0; // |lambda_l - (m1 lambda_1 + m2 lambda_2)| / |lambda_l|
    friend bool operator==(const ResonanceHit&, const ResonanceHit&) = default;
};

inline constexpr double kDefaultNonresonanceTol = 1e-6;
inline constexpr double kNearResonanceTol = 1e-3;

/// Every (m1, m2, l) with 2 <= m1 + m2 <= max_order whose relative gap is
/// within tol. Ordered by order, then m1 descending, then outer index.
std::vector<ResonanceHit> check_nonresonance(const Spectrum& s, int max_order, double tol = kDefaultNonresonanceTol);

/// Hits with tol < relative gap <= warn_tol: not resonant, but the matching
/// cohomological denominators are small.
std::vector<ResonanceHit> near_resonances(const Spectrum& s, int max_order, double tol = kDefaultNonresonanceTol,
                                          double warn_tol = kNearResonanceTol);

/// Real part alpha(mu) and frequency omega(mu) of the bifurcating pair and
/// the leading real outer eigenvalue nu(mu) over an interval (lo, hi).
class EigenCurves {
public:
    using Scalar = std::function<double(double)>;

    static EigenCurves from_functions(Scalar alpha, Scalar nu, double lo, double hi, int samples = 401,
                                      Scalar omega = nullptr);
    /// Tracks the leading pair and the leading real outer eigenvalue of A(mu)
    /// along a uniform grid using nearest-neighbour matching; the grid is
    /// refined locally where matching is ambiguous.
    static EigenCurves from_matrices(std::function<Eigen::MatrixXd(double)> matrix, double lo, double hi,
                                     int samples = 201);
    /// Tabulated curves interpolated by natural cubic splines.
    static EigenCurves from_table(const std::vector<double>& mu, const std::vector<double>& alpha,
                                  const std::vector<double>& omega, const std::vector<double>& nu);

    double alpha(double mu) const { return alpha_(mu); }
    double nu(double mu) const { return nu_(mu); }
    double omega(double mu) const { return omega_ ? omega_(mu) : 0.0; }

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    const std::vector<double>& grid() const noexcept { return grid_; }
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    Scalar alpha_, nu_, omega_;
    double lo_ = 0, hi_ = 0;
    std::vector<double> grid_;
    std::vector<std::string> diagnostics_;
};

struct ResonanceReport {
    int order = 0;                  // 2m
    double location = 0;            // mu_{2m}
    double residual = 0;            // |nu - 2m alpha| at location
    double asymptotic_estimate = 0; // closed-form location, NaN when not estimable
};

/// Local expansion alpha ~ a (mu0 - mu)^p, nu(mu0) = nu0 on the pre-bifurcation side.
struct BifurcationExpansion {
    double mu0 = 0;
    double a = 0;
    int p = 1;
    double nu0 = 0;
    bool valid = false;
};

struct ResonanceScan {
    std::vector<ResonanceReport> reports;  // sorted by order, then location
    std::vector<int> unbracketed;          // m values without a root in the interval
    std::vector<std::string> diagnostics;
    BifurcationExpansion expansion;
};

inline constexpr double kDefaultRootTol = 1e-10;

/// Zero of alpha on the interval (first negative-to-positive crossing).
double locate_bifurcation(const EigenCurves& curves, double tol = kDefaultRootTol);
BifurcationExpansion estimate_expansion(const EigenCurves& curves, double mu0);

/// Roots of nu(mu) - 2 m alpha(mu) for every m in m_values.
ResonanceScan locate_resonances(const EigenCurves& curves, const std::vector<int>& m_values,
                                double root_tol = kDefaultRootTol);

/// mu0 - (nu0 / (2 a m))^(1/p)
double asymptotic_resonance_estimate(double nu0, double a, int p, double mu0, int m);

}  // namespace pssm
