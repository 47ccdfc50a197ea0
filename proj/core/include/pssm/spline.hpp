#pragma once

#include <Eigen/Dense>

#include <vector>

namespace pssm {

/// Natural cubic splines for many series sharing one strictly increasing knot
/// vector. Column j of `values` is the j-th series sampled at the knots.
class NaturalCubicSplines {
public:
    NaturalCubicSplines() = default;
    NaturalCubicSplines(std::vector<double> knots, Eigen::MatrixXd values);

    const std::vector<double>& knots() const noexcept { return knots_; }
    Eigen::Index series_count() const noexcept { return values_.cols(); }

    /// Values of every series at x. Outside the knot hull the end cubic pieces
    /// are extended.
    Eigen::RowVectorXd operator()(double x) const;
    Eigen::RowVectorXd derivative(double x) const;

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    const Eigen::MatrixXd& second_derivatives() const noexcept { return m_; }

private:
    std::size_t interval(double x) const;

    std::vector<double> knots_;
    Eigen::MatrixXd values_;
    Eigen::MatrixXd m_;
};

}  // namespace pssm
