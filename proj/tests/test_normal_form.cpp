#include "pssm/error.hpp"
#include "pssm/integrator.hpp"
#include "pssm/normal_form.hpp"
#include "pssm/systems.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace pssm;

namespace {

// sigma h + rho - 2 h'(rho) (mu rho - rho^2), h' by a five-point stencil
double ode_residual(const HopfParams& p, const std::function<double(double)>& h, double rho) {
    const double s = 1e-3 * rho;
    const double dh = (h(rho - 2 * s) - 8 * h(rho - s) + 8 * h(rho + s) - h(rho + 2 * s)) / (12 * s);
    return p.sigma * h(rho) + rho - 2 * dh * (p.mu * rho - rho * rho);
}

// least squares fit y ~ X c, returns R^2 and c
std::pair<double, Eigen::VectorXd> fit_r2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::VectorXd c = X.colPivHouseholderQr().solve(y);
    const double ss_res = (X * c - y).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    return {1 - ss_res / ss_tot, c};
}

// Random (mu, sigma) with alpha away from the positive integers.
HopfParams random_params(std::mt19937_64& rng, double alpha_lo, double alpha_hi) {
    std::uniform_real_distribution<double> umu(0.2, 2.0), ua(alpha_lo, alpha_hi);
    double alpha;
    do alpha = ua(rng);
    while (std::abs(alpha - std::round(alpha)) < 0.05);
    const double mu = -umu(rng);
    return {mu, 1.0, 2 * mu * alpha};
}

}  // namespace

TEST_SUITE("normal_form") {

TEST_CASE("recursion values at mu = -1, sigma = -5") {
    const auto s = taylor_coefficients({-1, 1, -5}, 3);
    CHECK(std::abs(s.coefficient(1) - 1.0 / 3) < 1e-14);
    CHECK(std::abs(s.coefficient(2) - 2.0 / 3) < 1e-14);
    CHECK(std::abs(s.coefficient(3) + 8.0 / 3) < 1e-14);
}

TEST_CASE("resonant denominator") {
    try {
        taylor_coefficients({-1, 1, -4}, 2);
        FAIL("expected ResonantCoefficient");
    } catch (const ResonantCoefficientError& e) {
        CHECK(e.k0() == 2);
        CHECK(e.code() == ErrorCode::ResonantCoefficient);
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(taylor_coefficients({-1, 1, 1}, 3), Error);
    CHECK_THROWS_AS(taylor_coefficients({-1, 0, -3}, 3), Error);
}

TEST_CASE("ratio identity and first coefficient for random parameters") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_params(rng, 0.05, 8.0);
        const auto s = taylor_coefficients(p, 40);
        CHECK(s.coefficient(1) == 1.0 / (2 * p.mu - p.sigma));
        for (int k = 2; k <= 40; ++k)
            CHECK(s.coefficient(k) == 2.0 * (k - 1) / (2.0 * k * p.mu - p.sigma) * s.coefficient(k - 1));
    }
}

TEST_CASE("ratio estimate of the convergence radius") {
    // |a_K / a_{K+1}| = |mu| (K + 1 - alpha) / K, so the bias at K = 200 is (1 - alpha) / 200
    const auto s = taylor_coefficients({-0.5, 1, -1.3}, 201);
    CHECK(s.radius_estimate() == doctest::Approx(0.5).epsilon(0.01));
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = random_params(rng, 0.05, 2.95);
        CHECK(taylor_coefficients(p, 201).radius_estimate() == doctest::Approx(std::abs(p.mu)).epsilon(0.01));
    }
}

TEST_CASE("empty integral returns the anchor value") {
    const HopfParams p{-1, 1, -5};
    CHECK(exact_solution(p, 0.37, 0.2, 0.2) == 0.37);
    CHECK(particular_solution_series(p, 0.2, 0.2) == 0.0);
}

TEST_CASE("domain checks") {
    CHECK_THROWS_AS(exact_solution({0.5, 1, -3}, 0.1, 0.1, 0.6), Error);
    CHECK_THROWS_AS(exact_solution({-0.5, 1, -3}, 0.1, 0.1, -0.2), Error);
    try {
        exact_solution({0.5, 1, -3}, 0.1, 0.1, 0.6);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DomainViolation);
    }
}

TEST_CASE("analytic branch: quadrature reproduces the Taylor series") {
    const HopfParams p{-1, 1, -5};
    const double rho0 = 0.1;
    const double h0 = select_analytic_branch(p, rho0);
    // independent partial sum with an explicit tail bound
    const auto s = taylor_coefficients(p, 400);
    double ref = 0;
    for (int k = 400; k >= 1; --k) ref = (ref + s.coefficient(k)) * rho0;
    CHECK(h0 == doctest::Approx(ref).epsilon(1e-13));
    CHECK(select_analytic_branch(p, 1e-300) == doctest::Approx(0).scale(1));
    for (double rho = 0.05; rho <= 0.2 + 1e-12; rho += 0.025) {
        double series = 0;
        for (int k = 400; k >= 1; --k) series = (series + s.coefficient(k)) * rho;
        CHECK(std::abs(exact_solution(p, h0, rho0, rho) - series) < 1e-8);
    }
}

TEST_CASE("closed-form particular series agrees with quadrature") {
    std::mt19937_64 rng(9);
    std::vector<HopfParams> cases{{-1, 1, -5}, {-1, 1, -2}, {-0.7, 1, -2.1}, {0.8, 1, -3}, {0.5, 1, -1}};
    for (int i = 0; i < 6; ++i) cases.push_back(random_params(rng, 0.1, 6));
    for (const auto& p : cases) {
        const double m = std::abs(p.mu);
        const double rho0 = 0.1 * m;
        for (double f = 0.05; f <= 0.3 + 1e-12; f += 0.025) {
            const double rho = f * m;
            const double quad = exact_solution(p, 0.0, rho0, rho);
            CHECK(std::abs(particular_solution_series(p, rho0, rho) - quad) < 1e-8);
        }
    }
    CHECK(std::abs(particular_solution_series({-1, 1, -5}, 0.1, 0.3) - exact_solution({-1, 1, -5}, 0, 0.1, 0.3)) <
          1e-8);
}

TEST_CASE("log term of the resonant particular series") {
    // alpha = 1: the k = alpha - 1 binomial term integrates to (1/2) log(rho / rho0),
    // multiplied by M(rho)^-1 = rho / (1 + rho).
    const HopfParams p{-1, 1, -2};
    const double rho0 = 0.1;
    for (double rho : {0.05, 0.2, 0.3}) {
        const double with = particular_solution_series(p, rho0, rho);
        const double without = particular_solution_series(p, rho0, rho, 2000, false);
        const double expected = 0.5 * rho / (1 + rho) * std::log(rho / rho0);
        CHECK(std::abs((without - with) - expected) < 1e-12);
        CHECK(std::abs(with - exact_solution(p, 0, rho0, rho)) < 1e-8);
        CHECK(std::abs(without - exact_solution(p, 0, rho0, rho)) > 0.1 * std::abs(expected));
    }
}

TEST_CASE("every branch satisfies the invariance ODE") {
    for (const HopfParams& p : {HopfParams{-1, 1, -5}, HopfParams{-1, 1, -2}, HopfParams{-0.6, 2, -1.5},
                                HopfParams{0.5, 1, -3}}) {
        const double m = std::abs(p.mu);
        for (double h0 : {-0.2, 0.0, 0.05, 0.2}) {
            auto h = [&](double r) { return exact_solution(p, h0, 0.1 * m, r); };
            for (double f : {0.05, 0.1, 0.2, 0.3}) CHECK(std::abs(ode_residual(p, h, f * m)) < 1e-7);
        }
    }
}

TEST_CASE("alpha = 1 branches carry rho log rho with coefficient -1/2") {
    const HopfParams p{-1, 1, -2};
    const int n = 60;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double rho = std::pow(10.0, -4 + 2.0 * i / (n - 1));
        X(i, 0) = rho * std::log(rho);
        X(i, 1) = rho;
        y[i] = exact_solution(p, 0.0, 0.1, rho);
    }
    const auto [r2, c] = fit_r2(X, y);
    CHECK(r2 > 0.999);
    CHECK(c[0] == doctest::Approx(-0.5).epsilon(0.01));
    // without the log column the fit is visibly worse
    const auto [r2_plain, c_plain] = fit_r2(X.col(1), y);
    CHECK(r2_plain < r2);
}

TEST_CASE("regularity classes") {
    const auto a = classify_regularity({-1, 1, -5});
    CHECK(a.kind == RegularityClass::Kind::Hoelder);
    CHECK(a.analytic_branch_exists);
    CHECK(a.xy_integer_part == 5);
    CHECK(a.xy_exponent == 0.0);
    CHECK(a.boundary_case);

    const auto b = classify_regularity({-1, 1, -2});
    CHECK(b.kind == RegularityClass::Kind::LogResonant);
    CHECK(b.k0 == 1);
    CHECK(b.xy_integer_part == 1);
    CHECK_FALSE(b.analytic_branch_exists);

    const auto c = classify_regularity({0.5, 1, -3});
    CHECK(c.kind == RegularityClass::Kind::Analytic);

    const auto d = classify_regularity({-1, 1, -2.6});  // alpha = 1.3, 2 alpha = 2.6
    CHECK(d.kind == RegularityClass::Kind::Hoelder);
    CHECK(d.xy_integer_part == 2);
    CHECK(d.xy_exponent == doctest::Approx(0.6));
    CHECK_FALSE(d.boundary_case);
    for (double sigma = -0.3; sigma > -12; sigma -= 0.37) {
        const auto r = classify_regularity({-1, 1, sigma});
        CHECK((r.kind == RegularityClass::Kind::LogResonant) == is_positive_integer(sigma / -2.0));
        if (r.kind == RegularityClass::Kind::Hoelder) {
            CHECK(r.xy_exponent >= 0.0);
            CHECK(r.xy_exponent < 1.0);
        }
    }
}

TEST_CASE("post-bifurcation: non-analytic branches blow up at the origin") {
    const HopfParams p{0.5, 1, -3};
    const double rho0 = 0.1;
    const double ha = select_analytic_branch(p, rho0);
    const double analytic = exact_solution(p, ha, rho0, 1e-4);
    CHECK(std::abs(analytic) < 1e-3);
    for (double dh : {-0.05, 0.01, 0.05}) CHECK(std::abs(exact_solution(p, ha + dh, rho0, 1e-4)) > 10 * std::abs(analytic));
}

TEST_CASE("radial reduced flow matches the full toy system") {
    for (const HopfParams& p : {HopfParams{-0.5, 1, -2}, HopfParams{0.04, 1, -1}, HopfParams{0.3, 2, -5}}) {
        const auto field = toy_model_field(p);
        const Eigen::Vector3d x0(0.1, 0.05, 0.0);
        const double rho0 = x0.head<2>().squaredNorm();
        IntegratorOptions opt;
        opt.atol = 1e-12;
        opt.rtol = 1e-12;
        const auto traj = integrate(field, x0, p.mu, 10.0, 0.05, opt);
        for (Eigen::Index i = 0; i < traj.rows(); ++i) {
            const double rho = traj.states.row(i).head<2>().squaredNorm();
            CHECK(std::abs(rho - radial_flow(p, rho0, traj.times[i])) < 1e-6 * rho);
        }
    }
}

TEST_CASE("graph depends on (x, y) only through rho") {
    const HopfParams p{-1, 1, -5};
    const auto series = taylor_coefficients(p, 30);
    const ToyBranch branch{p, 0.1, 0.02};
    for (double th = 0; th < 2 * std::numbers::pi; th += 0.7) {
        const double x = 0.2, y = 0.1;
        const double xr = std::cos(th) * x - std::sin(th) * y, yr = std::sin(th) * x + std::cos(th) * y;
        CHECK(std::abs(series.evaluate(xr * xr + yr * yr) - series.evaluate(x * x + y * y)) < 1e-12);
        CHECK(std::abs(branch.z(xr, yr) - branch.z(x, y)) < 1e-12);
    }
}

TEST_CASE("cross-section is symmetric in x") {
    const ToyBranch branch{{-1, 1, -2.5}, 0.1, 0.05};
    const auto pts = cross_section(branch, 0.01, 0.5, 20);
    REQUIRE(pts.size() == 40);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(pts[i].x == doctest::Approx(-pts[39 - i].x));
        CHECK(pts[i].z == doctest::Approx(pts[39 - i].z));
    }
}

}  // TEST_SUITE
