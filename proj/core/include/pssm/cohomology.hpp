#pragma once

#include "pssm/poly2.hpp"
#include "pssm/poly_field.hpp"
#include "pssm/spectra.hpp"

#include <Eigen/Dense>

namespace pssm {

/// Real frames of the spectral subspace E and its spectral complement, plus
/// the complex eigenvector basis in which the linear part is diagonal.
///
/// Real coordinates: x = S_u xi + S_v eta. Complex coordinates: x = T q with
/// q_0 = xi_1 + i xi_2, q_1 = conj(q_0); for every outer real eigenvalue the
/// matching q entry equals its eta entry, and for every outer conjugate pair
/// q_l = eta_a + i eta_b.
struct EigenFrame {
    Spectrum spectrum;
    Eigen::MatrixXd S_u;   // N x 2
    Eigen::MatrixXd S_v;   // N x (N-2)
    Eigen::Matrix2d A_u;   // [[alpha, -omega], [omega, alpha]]
    Eigen::MatrixXd A_v;   // real block diagonal
    Eigen::MatrixXcd T;    // columns: v1, conj(v1), outer eigenvectors
    Eigen::MatrixXcd T_inv;
    Eigen::VectorXcd lambda;  // eigenvalue of each column of T
    /// For every outer q index (0-based among outer), the S_v column it feeds
    /// and whether it is the positive-imaginary member of a pair (+1), its
    /// conjugate (-1), or real (0).
    std::vector<std::pair<int, int>> outer_layout;
    double condition_number = 1.0;

    int dimension() const noexcept { return static_cast<int>(S_u.rows()); }
};

inline constexpr double kCollisionTol = 1e-8;
inline constexpr double kDefectiveCondition = 1e8;

EigenFrame build_eigenframe(const Eigen::MatrixXd& A, const Spectrum& subspace);

/// Taylor expansion of a 2D SSM and its reduced dynamics in the frame's real
/// reduced coordinates xi.
struct SsmExpansion {
    int order = 0;
    EigenFrame frame;
    Poly2 graph;     // eta = h(xi), degrees 2..K, values in R^{N-2}
    Poly2 manifold;  // W(xi) = S_v h(xi), degrees 2..K, values in R^N
    Poly2 reduced;   // xi' = R(xi), degrees 1..K+1
    /// Graph coefficients in (u, conj u), degrees 2..K, one row per outer q index.
    Eigen::MatrixXcd complex_graph;
    /// Coefficients of u' = r(u, conj u), degrees 1..K+1.
    Eigen::RowVectorXcd complex_reduced;

    Complex complex_coefficient(int outer, const Exponent2& k) const {
        return complex_graph(outer, monomial_index(k, 2));
    }
    /// x = S_u xi + W(xi)
    Eigen::VectorXd lift(const Eigen::Vector2d& xi) const;
};

inline constexpr double kDefaultResonanceTol = 1e-6;

/// Solves the cohomological equations order by order up to |k| = K and the
/// reduced dynamics up to K + 1. Throws ResonantOrderError when some L_k
/// diagonal entry is below res_tol * |lambda_l|.
SsmExpansion solve_ssm(const PolyVectorField& field, const EigenFrame& frame, int order,
                       double res_tol = kDefaultResonanceTol);

/// Max over samples xi on the disc of radius `radius` of
/// || eta'(xi) - Dh(xi) xi'(xi) || with (xi', eta') from the full field.
double invariance_residual(const PolyVectorField& field, const SsmExpansion& expansion, double radius,
                           int n_samples = 64);

/// Re-expresses the expansion in rotated reduced coordinates xi = Q zeta.
SsmExpansion apply_gauge(const SsmExpansion& expansion, const Eigen::Matrix2d& Q);

}  // namespace pssm
