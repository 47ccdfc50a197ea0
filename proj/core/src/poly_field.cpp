#include "pssm/poly_field.hpp"

#include "pssm/error.hpp"

#include <cctype>
#include <cstdlib>
#include <numeric>

namespace pssm {

int total_degree(const Exponents& e) { return std::accumulate(e.begin(), e.end(), 0); }

bool GradedLexLess::operator()(const Exponents& a, const Exponents& b) const {
    const int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

PolyVectorField::PolyVectorField(int dimension) : dimension_(dimension) {
    if (dimension <= 0) throw Error(ErrorCode::InvalidArgument, "field dimension must be positive");
}

int PolyVectorField::max_degree() const noexcept {
    return terms_.empty() ? 0 : total_degree(terms_.rbegin()->first);
}

void PolyVectorField::add_term(int component, const Exponents& e, double c) {
    if (component < 0 || component >= dimension_)
        throw Error(ErrorCode::InvalidArgument, "component index out of range");
    if (static_cast<int>(e.size()) != dimension_)
        throw Error(ErrorCode::InvalidArgument, "exponent length does not match dimension");
    for (int p : e)
        if (p < 0) throw Error(ErrorCode::InvalidArgument, "negative exponent");
    if (total_degree(e) == 0)
        throw Error(ErrorCode::InvalidArgument, "constant term: the origin must be a fixed point");
    auto [it, inserted] = terms_.try_emplace(e, Eigen::VectorXd::Zero(dimension_));
    it->second(component) += c;
    recompile();
}

void PolyVectorField::recompile() {
    compiled_.clear();
    compiled_.reserve(terms_.size());
    for (const auto& [e, c] : terms_) {
        (void)c;
        Compiled t;
        for (int j = 0; j < dimension_; ++j)
            if (e[j] > 0) t.factors.emplace_back(j, e[j]);
        compiled_.push_back(std::move(t));
    }
}

Eigen::MatrixXd PolyVectorField::linear_part() const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dimension_, dimension_);
    for (const auto& [e, c] : terms_) {
        if (total_degree(e) != 1) continue;
        const auto j = std::find(e.begin(), e.end(), 1) - e.begin();
        A.col(j) += c;
    }
    return A;
}

PolyVectorField PolyVectorField::nonlinear_part() const {
    PolyVectorField out(dimension_);
    for (const auto& [e, c] : terms_)
        if (total_degree(e) >= 2) out.terms_.emplace(e, c);
    out.recompile();
    return out;
}

void PolyVectorField::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    out.setZero(dimension_);
    auto it = terms_.begin();
    for (const auto& t : compiled_) {
        const Eigen::VectorXd& coeffs = (it++)->second;
        double m = 1.0;
        for (const auto& [j, p] : t.factors) {
            const double xj = x(j);
            for (int i = 0; i < p; ++i) m *= xj;
        }
        out.noalias() += m * coeffs;
    }
}

Eigen::VectorXd PolyVectorField::operator()(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out;
    evaluate(x, out);
    return out;
}

Eigen::MatrixXd PolyVectorField::jacobian(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dimension_, dimension_);
    auto it = terms_.begin();
    for (const auto& t : compiled_) {
        const Eigen::VectorXd& coeffs = (it++)->second;
        for (std::size_t a = 0; a < t.factors.size(); ++a) {
            double d = 1.0;
            for (std::size_t b = 0; b < t.factors.size(); ++b) {
                const auto [j, p] = t.factors[b];
                const int power = (a == b) ? p - 1 : p;
                for (int i = 0; i < power; ++i) d *= x(j);
                if (a == b) d *= p;
            }
            J.col(t.factors[a].first) += d * coeffs;
        }
    }
    return J;
}

// ---------------------------------------------------------------------------

CoefficientExpr CoefficientExpr::constant(double value) {
    CoefficientExpr e;
    e.products_.push_back({value, {}});
    e.text_ = std::to_string(value);
    return e;
}

CoefficientExpr CoefficientExpr::parse(const std::string& text) {
    CoefficientExpr expr;
    expr.text_ = text;
    std::size_t i = 0;
    const auto skip = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    const auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::ParseError, "coefficient '" + text + "': " + why);
    };

    skip();
    if (i == text.size()) fail("empty expression");
    bool first = true;
    while (i < text.size()) {
        Product prod;
        skip();
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            if (text[i] == '-') prod.factor = -1.0;
            ++i;
        } else if (!first) {
            fail("expected '+' or '-'");
        }
        first = false;
        int power = 1;
        bool need_factor = true;
        while (true) {
            skip();
            if (i >= text.size()) {
                if (need_factor) fail("dangling operator");
                break;
            }
            const char ch = text[i];
            if (need_factor) {
                if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
                    const char* begin = text.c_str() + i;
                    char* end = nullptr;
                    const double v = std::strtod(begin, &end);
                    if (end == begin) fail("bad number");
                    i += static_cast<std::size_t>(end - begin);
                    prod.factor = power > 0 ? prod.factor * v : prod.factor / v;
                } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
                    std::size_t j = i;
                    while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
                    prod.symbols.emplace_back(text.substr(i, j - i), power);
                    i = j;
                } else {
                    fail(std::string("unexpected character '") + ch + "'");
                }
                need_factor = false;
            } else if (ch == '*' || ch == '/') {
                power = (ch == '*') ? 1 : -1;
                need_factor = true;
                ++i;
            } else {
                break;
            }
        }
        expr.products_.push_back(std::move(prod));
    }
    return expr;
}

double CoefficientExpr::evaluate(const std::map<std::string, double>& symbols) const {
    double total = 0.0;
    for (const auto& p : products_) {
        double v = p.factor;
        for (const auto& [name, power] : p.symbols) {
            const auto it = symbols.find(name);
            if (it == symbols.end()) throw Error(ErrorCode::ParseError, "unknown symbol '" + name + "'");
            v = power > 0 ? v * it->second : v / it->second;
        }
        total += v;
    }
    return total;
}

PolyVectorField ParametricPolyField::at(double mu) const {
    std::map<std::string, double> symbols = constants;
    symbols[parameter] = mu;
    PolyVectorField f(dimension);
    for (const auto& e : entries) f.add_term(e.component, e.exponents, e.coefficient.evaluate(symbols));
    return f;
}

}  // namespace pssm
