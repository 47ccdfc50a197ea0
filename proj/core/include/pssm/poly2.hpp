#pragma once

#include <Eigen/Dense>

#include <complex>
#include <compare>
#include <string>
#include <vector>

namespace pssm {

/// Exponent pair (k1, k2) of the bivariate monomial u1^k1 u2^k2.
struct Exponent2 {
    int k1 = 0;
    int k2 = 0;

    int degree() const noexcept { return k1 + k2; }
    friend bool operator==(const Exponent2&, const Exponent2&) = default;
};

/// Graded-lexicographic comparison: lower degree first, then larger k1 first.
struct GradedLess {
    bool operator()(const Exponent2& a, const Exponent2& b) const noexcept {
        if (a.degree() != b.degree()) return a.degree() < b.degree();
        return a.k1 > b.k1;
    }
};

/// All exponents with min_degree <= |k| <= max_degree in graded-lex order.
std::vector<Exponent2> monomials(int min_degree, int max_degree);

/// Number of monomials with min_degree <= |k| <= max_degree.
inline int monomial_count(int min_degree, int max_degree) {
    if (max_degree < min_degree) return 0;
    return ((max_degree + 1) * (max_degree + 2) - min_degree * (min_degree + 1)) / 2;
}

/// Position of k inside monomials(min_degree, ...).
inline int monomial_index(const Exponent2& k, int min_degree) {
    const int d = k.degree();
    return (d * (d + 1) - min_degree * (min_degree + 1)) / 2 + (d - k.k1);
}

/// "k1,k2"
std::string exponent_key(const Exponent2& k);
Exponent2 parse_exponent_key(const std::string& key);

/// Row vector of monomial values u^k for the given exponent range.
Eigen::RowVectorXd monomial_row(const Eigen::Vector2d& u, int min_degree, int max_degree);

/// Design matrix with one row per sample (rows of U) and one column per monomial.
Eigen::MatrixXd monomial_design(const Eigen::MatrixX2d& U, int min_degree, int max_degree);

/// Vector-valued polynomial R^2 -> R^dim containing the homogeneous parts of
/// degrees min_degree..max_degree. Column j of `coeffs` belongs to the j-th
/// exponent of monomials(min_degree, max_degree).
class Poly2 {
public:
    Poly2() = default;
    Poly2(int dim, int min_degree, int max_degree);
    Poly2(int min_degree, int max_degree, Eigen::MatrixXd coeffs);

    int dim() const noexcept { return static_cast<int>(coeffs_.rows()); }
    int min_degree() const noexcept { return min_degree_; }
    int max_degree() const noexcept { return max_degree_; }
    int term_count() const noexcept { return static_cast<int>(coeffs_.cols()); }

    const Eigen::MatrixXd& coeffs() const noexcept { return coeffs_; }
    Eigen::MatrixXd& coeffs() noexcept { return coeffs_; }

    bool has(const Exponent2& k) const noexcept {
        return k.k1 >= 0 && k.k2 >= 0 && k.degree() >= min_degree_ && k.degree() <= max_degree_;
    }
    auto coefficient(const Exponent2& k) const { return coeffs_.col(monomial_index(k, min_degree_)); }
    auto coefficient(const Exponent2& k) { return coeffs_.col(monomial_index(k, min_degree_)); }

    Eigen::VectorXd operator()(const Eigen::Vector2d& u) const;
    /// dim x 2 derivative with respect to (u1, u2).
    Eigen::MatrixXd jacobian(const Eigen::Vector2d& u) const;
    /// Evaluates at every row of U; returns samples x dim.
    Eigen::MatrixXd evaluate_rows(const Eigen::MatrixX2d& U) const;

    /// P(M zeta) expressed in the variable zeta. Degrees are preserved.
    Poly2 compose_linear(const Eigen::Matrix2d& M) const;
    /// L * P for a fixed (out x dim) matrix L.
    Poly2 left_multiply(const Eigen::MatrixXd& L) const;

private:
    int min_degree_ = 0;
    int max_degree_ = -1;
    Eigen::MatrixXd coeffs_;
};

/// Substitutes (u1, u2) = M (z1, z2) into a polynomial given by its
/// coefficient columns over monomials(min_degree, max_degree).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> substitute_linear(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& coeffs, int min_degree, int max_degree,
    const Eigen::Matrix<Scalar, 2, 2>& M);

}  // namespace pssm
