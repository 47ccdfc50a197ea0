#include "pssm/poly2.hpp"

#include "pssm/error.hpp"

#include <charconv>
#include <cmath>

namespace pssm {

std::vector<Exponent2> monomials(int min_degree, int max_degree) {
    std::vector<Exponent2> out;
    out.reserve(static_cast<std::size_t>(std::max(0, monomial_count(min_degree, max_degree))));
    for (int d = min_degree; d <= max_degree; ++d)
        for (int k1 = d; k1 >= 0; --k1) out.push_back({k1, d - k1});
    return out;
}

std::string exponent_key(const Exponent2& k) {
    return std::to_string(k.k1) + "," + std::to_string(k.k2);
}

Exponent2 parse_exponent_key(const std::string& key) {
    const auto comma = key.find(',');
    Exponent2 k;
    if (comma == std::string::npos) throw Error(ErrorCode::ParseError, "bad monomial key '" + key + "'");
    auto r1 = std::from_chars(key.data(), key.data() + comma, k.k1);
    auto r2 = std::from_chars(key.data() + comma + 1, key.data() + key.size(), k.k2);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r2.ptr != key.data() + key.size() || k.k1 < 0 || k.k2 < 0)
        throw Error(ErrorCode::ParseError, "bad monomial key '" + key + "'");
    return k;
}

Eigen::RowVectorXd monomial_row(const Eigen::Vector2d& u, int min_degree, int max_degree) {
    Eigen::RowVectorXd row(std::max(0, monomial_count(min_degree, max_degree)));
    if (row.size() == 0) return row;
    Eigen::VectorXd p1(max_degree + 1), p2(max_degree + 1);
    p1(0) = p2(0) = 1.0;
    for (int i = 1; i <= max_degree; ++i) {
        p1(i) = p1(i - 1) * u(0);
        p2(i) = p2(i - 1) * u(1);
    }
    int j = 0;
    for (int d = min_degree; d <= max_degree; ++d)
        for (int k1 = d; k1 >= 0; --k1) row(j++) = p1(k1) * p2(d - k1);
    return row;
}

Eigen::MatrixXd monomial_design(const Eigen::MatrixX2d& U, int min_degree, int max_degree) {
    Eigen::MatrixXd design(U.rows(), std::max(0, monomial_count(min_degree, max_degree)));
    for (Eigen::Index i = 0; i < U.rows(); ++i)
        design.row(i) = monomial_row(U.row(i).transpose(), min_degree, max_degree);
    return design;
}

Poly2::Poly2(int dim, int min_degree, int max_degree)
    : min_degree_(min_degree), max_degree_(max_degree),
      coeffs_(Eigen::MatrixXd::Zero(dim, std::max(0, monomial_count(min_degree, max_degree)))) {}

Poly2::Poly2(int min_degree, int max_degree, Eigen::MatrixXd coeffs)
    : min_degree_(min_degree), max_degree_(max_degree), coeffs_(std::move(coeffs)) {
    if (coeffs_.cols() != std::max(0, monomial_count(min_degree, max_degree)))
        throw Error(ErrorCode::InvalidArgument, "coefficient column count does not match degree range");
}

Eigen::VectorXd Poly2::operator()(const Eigen::Vector2d& u) const {
    if (term_count() == 0) return Eigen::VectorXd::Zero(dim());
    return coeffs_ * monomial_row(u, min_degree_, max_degree_).transpose();
}

Eigen::MatrixXd Poly2::jacobian(const Eigen::Vector2d& u) const {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim(), 2);
    if (term_count() == 0) return J;
    Eigen::VectorXd p1(max_degree_ + 1), p2(max_degree_ + 1);
    p1(0) = p2(0) = 1.0;
    for (int i = 1; i <= max_degree_; ++i) {
        p1(i) = p1(i - 1) * u(0);
        p2(i) = p2(i - 1) * u(1);
    }
    int j = 0;
    for (int d = min_degree_; d <= max_degree_; ++d) {
        for (int k1 = d; k1 >= 0; --k1, ++j) {
            const int k2 = d - k1;
            if (k1 > 0) J.col(0) += coeffs_.col(j) * (k1 * p1(k1 - 1) * p2(k2));
            if (k2 > 0) J.col(1) += coeffs_.col(j) * (k2 * p1(k1) * p2(k2 - 1));
        }
    }
    return J;
}

Eigen::MatrixXd Poly2::evaluate_rows(const Eigen::MatrixX2d& U) const {
    if (term_count() == 0) return Eigen::MatrixXd::Zero(U.rows(), dim());
    return monomial_design(U, min_degree_, max_degree_) * coeffs_.transpose();
}

Poly2 Poly2::compose_linear(const Eigen::Matrix2d& M) const {
    return Poly2(min_degree_, max_degree_, substitute_linear<double>(coeffs_, min_degree_, max_degree_, M));
}

Poly2 Poly2::left_multiply(const Eigen::MatrixXd& L) const {
    return Poly2(min_degree_, max_degree_, L * coeffs_);
}

namespace {

// Coefficients of (a z1 + b z2)^n, index j <-> z1^(n-j) z2^j.
template <typename Scalar>
std::vector<Scalar> linear_power(Scalar a, Scalar b, int n) {
    std::vector<Scalar> c(static_cast<std::size_t>(n) + 1, Scalar(0));
    c[0] = Scalar(1);
    for (int step = 0; step < n; ++step) {
        for (int j = step + 1; j >= 0; --j) {
            Scalar v = Scalar(0);
            if (j <= step) v += a * c[j];
            if (j >= 1) v += b * c[j - 1];
            c[j] = v;
        }
    }
    return c;
}

}  // namespace

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> substitute_linear(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& coeffs, int min_degree, int max_degree,
    const Eigen::Matrix<Scalar, 2, 2>& M) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat out = Mat::Zero(coeffs.rows(), coeffs.cols());
    int col = 0;
    for (int d = min_degree; d <= max_degree; ++d) {
        for (int k1 = d; k1 >= 0; --k1, ++col) {
            const int k2 = d - k1;
            // u1^k1 u2^k2 with u1 = M00 z1 + M01 z2, u2 = M10 z1 + M11 z2.
            const auto p = linear_power<Scalar>(M(0, 0), M(0, 1), k1);
            const auto q = linear_power<Scalar>(M(1, 0), M(1, 1), k2);
            for (int i = 0; i <= k1; ++i) {
                if (p[i] == Scalar(0)) continue;
                for (int j = 0; j <= k2; ++j) {
                    const Scalar w = p[i] * q[j];
                    if (w == Scalar(0)) continue;
                    // power of z2 is i + j, power of z1 is d - i - j
                    const int target = monomial_index({d - i - j, i + j}, min_degree);
                    out.col(target) += w * coeffs.col(col);
                }
            }
        }
    }
    return out;
}

template Eigen::MatrixXd substitute_linear<double>(const Eigen::MatrixXd&, int, int, const Eigen::Matrix2d&);
template Eigen::MatrixXcd substitute_linear<std::complex<double>>(const Eigen::MatrixXcd&, int, int,
                                                                  const Eigen::Matrix2cd&);

}  // namespace pssm
