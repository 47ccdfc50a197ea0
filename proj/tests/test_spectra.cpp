#include "pssm/error.hpp"
#include "pssm/spectra.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace pssm;

namespace {

Eigen::MatrixXd block(double a, double w, std::initializer_list<double> reals) {
    const int n = 2 + static_cast<int>(reals.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    A(0, 0) = a;
    A(0, 1) = -w;
    A(1, 0) = w;
    A(1, 1) = a;
    int i = 2;
    for (double r : reals) A(i, i) = r, ++i;
    return A;
}

bool has_eigenvalue(const Spectrum& s, Complex z, double tol = 1e-10) {
    for (const auto& l : s.eigenvalues)
        if (std::abs(l - z) < tol) return true;
    return false;
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an exception");
    return ErrorCode::InvalidArgument;
}

// Independent exhaustive enumeration, no shared code with the library.
std::vector<std::array<int, 3>> brute_force(const std::vector<Complex>& ev, int i1, int i2, int max_order, double tol) {
    std::vector<std::array<int, 3>> out;
    for (int order = 2; order <= max_order; ++order)
        for (int m1 = order; m1 >= 0; --m1)
            for (int l = 0; l < static_cast<int>(ev.size()); ++l) {
                if (l == i1 || l == i2) continue;
                const Complex target = double(m1) * ev[i1] + double(order - m1) * ev[i2];
                if (std::abs(ev[l] - target) <= tol * std::abs(ev[l])) out.push_back({m1, order - m1, l});
            }
    return out;
}

}  // namespace

TEST_SUITE("spectra") {

TEST_CASE("block-diagonal input reads off its blocks") {
    const auto s = compute_spectrum(block(-1, 2, {-5}));
    REQUIRE(s.eigenvalues.size() == 3);
    CHECK(std::abs(s.lambda1() - Complex(-1, 2)) < 1e-12);
    CHECK(std::abs(s.lambda2() - Complex(-1, -2)) < 1e-12);
    CHECK(std::abs(s.eigenvalues[2] - Complex(-5, 0)) < 1e-12);
    CHECK(s.subspace == std::array<int, 2>{0, 1});
}

TEST_CASE("identity has no leading conjugate pair") {
    CHECK(code_of([] { compute_spectrum(Eigen::MatrixXd::Identity(3, 3)); }) == ErrorCode::NoConjugatePair);
}

TEST_CASE("non-square input is rejected") {
    CHECK(code_of([] { compute_spectrum(Eigen::MatrixXd::Zero(2, 3)); }) == ErrorCode::NonSquare);
}

TEST_CASE("companion matrix of (l^2 + 2l + 5)(l + 4)") {
    // l^3 + 6 l^2 + 13 l + 20
    Eigen::Matrix3d C;
    C << 0, 1, 0, 0, 0, 1, -20, -13, -6;
    const auto s = compute_spectrum(C);
    CHECK(has_eigenvalue(s, {-1, 2}, 1e-9));
    CHECK(has_eigenvalue(s, {-1, -2}, 1e-9));
    CHECK(has_eigenvalue(s, {-4, 0}, 1e-9));
    CHECK(s.alpha() == doctest::Approx(-1).epsilon(1e-9));
    CHECK(s.omega() == doctest::Approx(2).epsilon(1e-9));
}

TEST_CASE("explicit subspace indices") {
    // leading real eigenvalue, pair selected explicitly
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
    A(0, 0) = -0.5;
    A.block<2, 2>(1, 1) << -1, -3, 3, -1;
    const auto s = compute_spectrum(A, std::array<int, 2>{1, 2});
    CHECK(std::abs(s.lambda1() - Complex(-1, 3)) < 1e-12);
    CHECK(code_of([&] { compute_spectrum(A, std::array<int, 2>{0, 1}); }) == ErrorCode::NoConjugatePair);
}

TEST_CASE("spectral quotient") {
    CHECK(spectral_quotient(make_spectrum({{-1, 2}, {-1, -2}, {-5, 0}})) == 6);
    CHECK(spectral_quotient(make_spectrum({{-1, 2}, {-1, -2}, {-1.5, 0}})) == 2);
    CHECK(spectral_quotient(make_spectrum({{-1, 2}, {-1, -2}, {-3, 0}})) == 4);
    CHECK(code_of([] { spectral_quotient(make_spectrum({{0.1, 2}, {0.1, -2}, {-3, 0}})); }) ==
          ErrorCode::UnstableSpectrum);
}

TEST_CASE("nonresonance examples") {
    const auto r4 = check_nonresonance(make_spectrum({{-1, 2}, {-1, -2}, {-4, 0}}), 4);
    REQUIRE(r4.size() == 1);
    CHECK(r4[0].m1 == 2);
    CHECK(r4[0].m2 == 2);
    CHECK(r4[0].outer == 2);
    CHECK(check_nonresonance(make_spectrum({{-1, 2}, {-1, -2}, {-5, 0}}), 6).empty());
    CHECK(check_nonresonance(make_spectrum({{-1, 2}, {-1, -2}, {-3.5, 0}}), 4).empty());
}

TEST_CASE("near resonances are reported separately") {
    const auto s = make_spectrum({{-1, 2}, {-1, -2}, {-4.002, 0}});
    CHECK(check_nonresonance(s, 4).empty());
    const auto near = near_resonances(s, 4);
    REQUIRE(near.size() == 1);
    CHECK(near[0].m1 == 2);
}

TEST_CASE("eigenvalues are sorted by nonincreasing real part") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) A(i, j) = g(rng);
        // lift a conjugate pair above everything else
        A.topLeftCorner(2, 2) << 20, -5, 5, 20;
        const auto s = compute_spectrum(A);
        for (std::size_t i = 1; i < s.eigenvalues.size(); ++i)
            CHECK(s.eigenvalues[i].real() <= s.eigenvalues[i - 1].real());
        CHECK(std::abs(s.lambda1() - std::conj(s.lambda2())) < 1e-9 * std::abs(s.lambda1()));
    }
}

TEST_CASE("nonresonance agrees with exhaustive enumeration") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.2, 2.0);
    std::uniform_int_distribution<int> pick(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = -u(rng), w = u(rng);
        std::vector<Complex> ev{{a, w}, {a, -w}};
        const int n_outer = 1 + trial % 4;
        for (int l = 0; l < n_outer; ++l) {
            // half of the outer eigenvalues sit exactly on a lattice point
            if (rng() % 2) {
                const int order = 2 + (pick(rng) % 7);
                const int m1 = static_cast<int>(rng() % static_cast<unsigned>(order + 1));
                const Complex z = double(m1) * ev[0] + double(order - m1) * ev[1];
                ev.push_back(z);
                if (z.imag() != 0) ev.push_back(std::conj(z));
            } else {
                ev.push_back({a - u(rng) * 6, 0});
            }
        }
        const int max_order = pick(rng);
        if (max_order < 2) continue;
        const auto s = make_spectrum(ev);
        std::vector<Complex> sorted = s.eigenvalues;
        const auto got = check_nonresonance(s, max_order);
        const auto want = brute_force(sorted, s.subspace[0], s.subspace[1], max_order, kDefaultNonresonanceTol);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].m1 == want[i][0]);
            CHECK(got[i].m2 == want[i][1]);
            CHECK(got[i].outer == want[i][2]);
        }
    }
}

TEST_CASE("linear curves: closed-form resonance locations") {
    const auto curves = EigenCurves::from_functions([](double mu) { return mu; }, [](double) { return -4.0; }, -3, 1);
    const auto scan = locate_resonances(curves, {1, 2, 4});
    REQUIRE(scan.reports.size() == 3);
    CHECK(scan.reports[0].order == 2);
    CHECK(std::abs(scan.reports[0].location + 2) <= kDefaultRootTol);
    CHECK(std::abs(scan.reports[1].location + 1) <= kDefaultRootTol);
    CHECK(std::abs(scan.reports[2].location + 0.5) <= kDefaultRootTol);
    CHECK(std::abs(scan.reports[2].asymptotic_estimate + 0.5) <= kDefaultRootTol);
    for (const auto& r : scan.reports) {
        CHECK(r.residual <= kDefaultRootTol);
        CHECK(r.location < 0.0);
    }
}

TEST_CASE("resonance outside the interval is a diagnostic, not a report") {
    const auto curves =
        EigenCurves::from_functions([](double mu) { return mu; }, [](double) { return -4.0; }, -0.1, 0.1);
    const auto scan = locate_resonances(curves, {1});
    CHECK(scan.reports.empty());
    REQUIRE(scan.unbracketed.size() == 1);
    CHECK(scan.unbracketed[0] == 1);
    CHECK_FALSE(scan.diagnostics.empty());
}

TEST_CASE("no bifurcation in range") {
    const auto curves =
        EigenCurves::from_functions([](double mu) { return mu - 5; }, [](double) { return -4.0; }, -1, 1);
    CHECK(code_of([&] { locate_resonances(curves, {1}); }) == ErrorCode::NoBifurcationInRange);
}

TEST_CASE("asymptotic estimate formula") {
    CHECK(asymptotic_resonance_estimate(-4, -1, 1, 0, 1) == doctest::Approx(-2));
    CHECK(asymptotic_resonance_estimate(-4, -1, 1, 0, 2) == doctest::Approx(-1));
    CHECK(asymptotic_resonance_estimate(-1, -1, 2, 5, 2) == doctest::Approx(4.5));
    CHECK(code_of([] { asymptotic_resonance_estimate(1, -1, 1, 0, 1); }) == ErrorCode::SignViolation);
    CHECK(code_of([] { asymptotic_resonance_estimate(-1, 1, 1, 0, 1); }) == ErrorCode::SignViolation);
}

TEST_CASE("estimated local expansion recovers a and p") {
    const auto quad = EigenCurves::from_functions([](double mu) { return -0.7 * (2 - mu) * (2 - mu) * (mu < 2 ? 1 : -1); },
                                                  [](double) { return -3.0; }, 0, 3, 801);
    const double mu0 = locate_bifurcation(quad);
    CHECK(mu0 == doctest::Approx(2).epsilon(1e-8));
    const auto ex = estimate_expansion(quad, mu0);
    REQUIRE(ex.valid);
    CHECK(ex.p == 2);
    CHECK(ex.a == doctest::Approx(-0.7).epsilon(1e-2));
    CHECK(ex.nu0 == doctest::Approx(-3).epsilon(1e-9));
}

TEST_CASE("resonances with nonlinear remainders converge to the asymptotic law") {
    // alpha = (mu - mu0) + 0.4 (mu - mu0)^2, nu = -2 + 0.3 (mu - mu0)
    const double mu0 = 1.0;
    const auto curves = EigenCurves::from_functions(
        [=](double mu) { return (mu - mu0) + 0.4 * (mu - mu0) * (mu - mu0); },
        [=](double mu) { return -2.0 + 0.3 * (mu - mu0); }, -0.5, 1.5, 2001);
    const std::vector<int> ms{4, 8, 16, 32};
    const auto scan = locate_resonances(curves, ms);
    REQUIRE(scan.reports.size() == ms.size());
    double prev = INFINITY;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const auto& r = scan.reports[i];
        CHECK(r.residual <= kDefaultRootTol);
        const double scaled = std::abs(r.location - r.asymptotic_estimate) * ms[i];
        CHECK(scaled < prev);
        prev = scaled;
        if (i > 0) CHECK(r.location > scan.reports[i - 1].location);
    }
}

TEST_CASE("curves tracked from matrices keep the pair continuous") {
    // the outer eigenvalue passes through the pair's real part without swaps
    auto A = [](double mu) { return block(mu, 1.5, {-1.0 + 0.5 * mu, -4.0}); };
    const auto curves = EigenCurves::from_matrices(A, -1.0, 0.5, 101);
    for (double mu : {-0.9, -0.3, 0.0, 0.4}) {
        CHECK(curves.alpha(mu) == doctest::Approx(mu).epsilon(1e-6).scale(1));
        CHECK(curves.nu(mu) == doctest::Approx(-1.0 + 0.5 * mu).epsilon(1e-6).scale(1));
        CHECK(curves.omega(mu) == doctest::Approx(1.5).epsilon(1e-6));
    }
}

}  // TEST_SUITE
