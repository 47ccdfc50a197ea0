#include "pssm/spline.hpp"

#include "pssm/error.hpp"

#include <algorithm>

namespace pssm {

NaturalCubicSplines::NaturalCubicSplines(std::vector<double> knots, Eigen::MatrixXd values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    const auto n = knots_.size();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "spline needs at least two knots");
    if (static_cast<std::size_t>(values_.rows()) != n)
        throw Error(ErrorCode::InvalidArgument, "spline values must have one row per knot");
    for (std::size_t i = 1; i < n; ++i)
        if (!(knots_[i] > knots_[i - 1])) throw Error(ErrorCode::InvalidArgument, "spline knots must increase strictly");

    m_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), values_.cols());
    if (n == 2) return;

    // Tridiagonal system for interior second derivatives, natural ends M_0 = M_{n-1} = 0.
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), lower(k);
    Eigen::MatrixXd rhs(static_cast<Eigen::Index>(k), values_.cols());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = knots_[i] - knots_[i - 1];
        const double h1 = knots_[i + 1] - knots_[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        lower[i - 1] = h0;
        upper[i - 1] = h1;
        const auto r = static_cast<Eigen::Index>(i);
        rhs.row(r - 1) = 6.0 * ((values_.row(r + 1) - values_.row(r)) / h1 - (values_.row(r) - values_.row(r - 1)) / h0);
    }
    for (std::size_t i = 1; i < k; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs.row(static_cast<Eigen::Index>(i)) -= w * rhs.row(static_cast<Eigen::Index>(i - 1));
    }
    Eigen::MatrixXd sol(static_cast<Eigen::Index>(k), values_.cols());
    sol.row(static_cast<Eigen::Index>(k - 1)) = rhs.row(static_cast<Eigen::Index>(k - 1)) / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) {
        const auto r = static_cast<Eigen::Index>(i);
        sol.row(r) = (rhs.row(r) - upper[i] * sol.row(r + 1)) / diag[i];
    }
    m_.middleRows(1, static_cast<Eigen::Index>(k)) = sol;
}

std::size_t NaturalCubicSplines::interval(double x) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin(), 1)) - 1;
    return std::min(i, knots_.size() - 2);
}

Eigen::RowVectorXd NaturalCubicSplines::operator()(double x) const {
    const std::size_t i = interval(x);
    const auto r = static_cast<Eigen::Index>(i);
    if (x == knots_[i]) return values_.row(r);
    if (x == knots_[i + 1]) return values_.row(r + 1);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - x) / h;
    const double b = (x - knots_[i]) / h;
    return a * values_.row(r) + b * values_.row(r + 1) +
           ((a * a * a - a) * m_.row(r) + (b * b * b - b) * m_.row(r + 1)) * (h * h / 6.0);
}

Eigen::RowVectorXd NaturalCubicSplines::derivative(double x) const {
    const std::size_t i = interval(x);
    const auto r = static_cast<Eigen::Index>(i);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - x) / h;
    const double b = (x - knots_[i]) / h;
    return (values_.row(r + 1) - values_.row(r)) / h +
           (-(3.0 * a * a - 1.0) * m_.row(r) + (3.0 * b * b - 1.0) * m_.row(r + 1)) * (h / 6.0);
}

}  // namespace pssm
