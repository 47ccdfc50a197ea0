#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace pssm {

using Exponents = std::vector<int>;

/// Graded-lexicographic order on N-variate exponents: total degree first,
/// then lexicographically larger exponent (in x1, x2, ...) first.
struct GradedLexLess {
    bool operator()(const Exponents& a, const Exponents& b) const;
};

int total_degree(const Exponents& e);

/// Polynomial autonomous vector field f: R^N -> R^N with f(0) = 0. Each stored
/// monomial carries one coefficient per output component.
class PolyVectorField {
public:
    PolyVectorField() = default;
    explicit PolyVectorField(int dimension);

    int dimension() const noexcept { return dimension_; }
    int max_degree() const noexcept;

    /// Adds c * x^e to component `component`. Constant terms are rejected.
    void add_term(int component, const Exponents& e, double c);

    const std::map<Exponents, Eigen::VectorXd, GradedLexLess>& terms() const noexcept { return terms_; }

    /// Degree-1 coefficient block A with A(i, j) = d f_i / d x_j at 0.
    Eigen::MatrixXd linear_part() const;
    /// Field with the degree-1 terms removed.
    PolyVectorField nonlinear_part() const;

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
    void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;

private:
    struct Compiled {
        std::vector<std::pair<int, int>> factors;  // (variable, power)
    };
    void recompile();

    int dimension_ = 0;
    std::map<Exponents, Eigen::VectorXd, GradedLexLess> terms_;
    std::vector<Compiled> compiled_;  // parallel to terms_
};

/// Coefficient expression: a sum of signed products of numbers and symbols,
/// e.g. "2*mu - sigma" or "-omega/2".
class CoefficientExpr {
public:
    static CoefficientExpr parse(const std::string& text);
    static CoefficientExpr constant(double value);

    double evaluate(const std::map<std::string, double>& symbols) const;
    const std::string& text() const noexcept { return text_; }

private:
    struct Product {
        double factor = 1.0;
        std::vector<std::pair<std::string, int>> symbols;  // (name, +1 | -1 power)
    };
    std::vector<Product> products_;
    std::string text_;
};

/// Polynomial field whose coefficients depend on one scalar parameter plus
/// named constants.
struct ParametricPolyField {
    struct Entry {
        int component = 0;
        Exponents exponents;
        CoefficientExpr coefficient;
    };

    int dimension = 0;
    int degree = 0;
    std::string parameter = "mu";
    double parameter_default = 0.0;
    std::map<std::string, double> constants;
    std::vector<Entry> entries;

    PolyVectorField at(double mu) const;
};

}  // namespace pssm
