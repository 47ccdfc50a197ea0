#include "pssm/error.hpp"
#include "pssm/systems.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

using namespace pssm;

namespace {

std::vector<Complex> sorted(std::vector<Complex> v) {
    std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return v;
}

std::vector<Complex> eig(const Eigen::MatrixXd& A) {
    const Eigen::VectorXcd ev = A.eigenvalues();
    return sorted(std::vector<Complex>(ev.data(), ev.data() + ev.size()));
}

template <typename F>
void expect_error(ErrorCode code, F&& f) {
    try {
        f();
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == code);
    }
}

}  // namespace

TEST_SUITE("systems") {

TEST_CASE("toy model decays at the linear rate") {
    const auto f = toy_model_field({-0.5, 1, -5});
    const auto d = integrate(f, Eigen::Vector3d(0.1, 0, 0), -0.5, 40.0, 0.1);
    // least-squares slope of log r over the tail
    double st = 0, sl = 0, stt = 0, stl = 0;
    int n = 0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const double t = d.times[i];
        if (t < 20) continue;
        const double l = std::log(d.states.row(i).head<2>().norm());
        st += t, sl += l, stt += t * t, stl += t * l;
        ++n;
    }
    const double slope = (n * stl - st * sl) / (n * stt - st * st);
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.02));
}

TEST_CASE("toy model settles on the limit cycle") {
    const auto f = toy_model_field({0.04, 1, -5});
    const auto d = integrate(f, Eigen::Vector3d(0.01, 0, 0), 0.04, 500.0, 0.1);
    const double r = d.states.bottomRows<1>().leftCols<2>().norm();
    CHECK(std::abs(r - 0.2) < 1e-3);
}

TEST_CASE("a fixed point stays put") {
    const auto f = toy_model_field({-0.5, 1, -5});
    const auto d = integrate(f, Eigen::Vector3d::Zero(), -0.5, 5.0, 0.1);
    CHECK(d.states.cwiseAbs().maxCoeff() == 0.0);
    const SurrogateSystem sys({.dimension = 12});
    const auto s = integrate(sys, Eigen::VectorXd::Zero(12), 8100, 5.0, 0.1);
    CHECK(s.states.cwiseAbs().maxCoeff() == 0.0);
    for (double mu : {7000.0, 8015.0, 9000.0}) {
        Eigen::VectorXd dx;
        sys.rhs(mu, Eigen::VectorXd::Zero(12), dx);
        CHECK(dx.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("integration grid and blow-up") {
    const auto f = toy_model_field({-0.5, 1, -5});
    const auto d = integrate(f, Eigen::Vector3d(0.1, 0, 0), -0.5, 1.0, 0.25);
    REQUIRE(d.rows() == 5);
    for (Eigen::Index i = 0; i < d.rows(); ++i) CHECK(d.times[i] == doctest::Approx(0.25 * i));
    CHECK_NOTHROW(d.validate());

    PolyVectorField g(1);
    g.add_term(0, {2}, 1.0);  // x' = x^2 leaves every bounded set before t = 1
    expect_error(ErrorCode::BlowUp, [&] { integrate(g, Eigen::VectorXd::Ones(1), 0.0, 2.0, 0.1); });
    expect_error(ErrorCode::InvalidArgument, [&] { integrate(f, Eigen::Vector3d(0.1, 0, 0), -0.5, 1.0, 0.0); });
}

TEST_CASE("step-size convergence on the toy model") {
    const auto f = toy_model_field({-0.3, 1.5, -2.5});
    const Eigen::Vector3d x0(0.3, -0.2, 0.1);
    const auto a = integrate(f, x0, -0.3, 10.0, 0.1);
    const auto b = integrate(f, x0, -0.3, 10.0, 0.05);
    double worst = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) worst = std::max(worst, (a.states.row(i) - b.states.row(2 * i)).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-7);
}

TEST_CASE("linearization of the toy model") {
    const auto A = toy_model_field({-0.7, 1.3, -4.1}).linear_part();
    Eigen::Matrix3d want;
    want << -0.7, -1.3, 0, 1.3, -0.7, 0, 0, 0, -4.1;
    CHECK((A - want).norm() == 0.0);
}

TEST_CASE("surrogate spectrum fidelity") {
    const SurrogateSystem sys;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(7000, 9000);
    for (int i = 0; i < 20; ++i) {
        const double mu = u(rng);
        const auto got = eig(sys.linearize(mu));
        const auto want = sorted(sys.prescribed_eigenvalues(mu));
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) < 1e-8);
        CHECK(want[0].real() == doctest::Approx(sys.alpha(mu)));
        CHECK(std::abs(want[0].imag()) == doctest::Approx(sys.omega(mu)));
    }
    CHECK(sys.alpha(8015) == 0.0);
    // 2 alpha > nu_1 over the working range: the first resonance lies below it
    for (double mu = 7900; mu <= 8500; mu += 50) CHECK(2 * sys.alpha(mu) > sys.stable_eigenvalues().maxCoeff());
}

TEST_CASE("finite-difference Jacobian at the origin") {
    const SurrogateSystem sys({.dimension = 16, .seed = 3});
    const double mu = 8100, h = 1e-4;
    const Eigen::MatrixXd A = sys.linearize(mu);
    Eigen::MatrixXd J(16, 16);
    Eigen::VectorXd fp, fm;
    for (int j = 0; j < 16; ++j) {
        const Eigen::VectorXd e = h * Eigen::VectorXd::Unit(16, j);
        sys.rhs(mu, e, fp);
        sys.rhs(mu, -e, fm);
        J.col(j) = (fp - fm) / (2 * h);
    }
    CHECK((J - A).cwiseAbs().maxCoeff() < 1e-6);
    // polynomial systems loaded from text agree with their coefficient block
    const auto toy = load_system_spec(PSSM_CONFIG_DIR "/toy.sys");
    const RhsFn f = toy.rhs_at(-0.5);
    Eigen::Matrix3d Jt;
    Eigen::VectorXd gp, gm;
    for (int j = 0; j < 3; ++j) {
        const Eigen::VectorXd e = h * Eigen::VectorXd::Unit(3, j);
        f(e, gp);
        f(-e, gm);
        Jt.col(j) = (gp - gm) / (2 * h);
    }
    CHECK((Jt - toy.linearize(-0.5)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("surrogate construction is deterministic") {
    const SurrogateSystem a, b, c({.seed = 8});
    CHECK(a.mixing() == b.mixing());
    CHECK(a.couplings() == b.couplings());
    CHECK(a.mixing() != c.mixing());
    CHECK((a.mixing().transpose() * a.mixing() - Eigen::MatrixXd::Identity(64, 64)).norm() < 1e-12);
}

TEST_CASE("pre-bifurcation data decays to the fixed point") {
    const SurrogateSystem sys;
    DataOptions opt;
    opt.pre_decay = 1e-4;  // run long enough to see the decay through
    const auto d = generate_training_data(sys, 7950, Protocol::PreBifurcation, 1, opt);
    CHECK(d.provenance.protocol == "pre-bif");
    CHECK(d.provenance.discarded_fraction == doctest::Approx(0.1));
    CHECK(d.states.bottomRows<1>().norm() < 1e-3 * d.states.topRows<1>().norm());
    CHECK(d.states.allFinite());
    // eventually decreasing envelope: window maxima shrink
    const Eigen::Index w = d.rows() / 10;
    double prev = INFINITY;
    for (Eigen::Index s = 0; s + w <= d.rows(); s += w) {
        const double m = d.states.middleRows(s, w).rowwise().norm().maxCoeff();
        CHECK(m < prev);
        prev = m;
    }
    // the initial perturbation sits at a tenth of the reference amplitude in the pair plane
    CHECK(sys.pair_radius(d.provenance.initial_condition) == doctest::Approx(0.1 * sys.reference_amplitude()));
}

TEST_CASE("post-bifurcation data reaches the limit cycle") {
    const SurrogateSystem sys;
    for (double mu : {8050.0, 8300.0}) {
        const auto d = generate_training_data(sys, mu, Protocol::PostBifurcation, 1);
        CHECK(d.provenance.settled);
        const double r = sys.pair_radius(d.states.bottomRows<1>().transpose());
        CHECK(r > 0);
        CHECK(r == doctest::Approx(sys.limit_cycle_radius(mu)).epsilon(0.01));
        CHECK(d.provenance.initial_condition.norm() == doctest::Approx(1e-4));
        const Eigen::VectorXd dir = d.provenance.initial_condition.normalized();
        CHECK(std::abs(dir.dot(sys.unstable_direction())) == doctest::Approx(1.0));
    }
}

TEST_CASE("protocol and regime must agree") {
    const SurrogateSystem sys;
    expect_error(ErrorCode::WrongRegime, [&] { generate_training_data(sys, 8100, Protocol::PreBifurcation, 1); });
    expect_error(ErrorCode::WrongRegime, [&] { generate_training_data(sys, 7900, Protocol::PostBifurcation, 1); });
    CHECK(parse_protocol("pre-bif") == Protocol::PreBifurcation);
    CHECK(parse_protocol("post-bif") == Protocol::PostBifurcation);
    CHECK(to_string(Protocol::PostBifurcation) == "post-bif");
    expect_error(ErrorCode::InvalidArgument, [] { parse_protocol("sideways"); });
}

TEST_CASE("training data is bitwise reproducible") {
    const SurrogateSystem sys({.dimension = 16});
    const auto a = generate_training_data(sys, 7950, Protocol::PreBifurcation, 42);
    const auto b = generate_training_data(sys, 7950, Protocol::PreBifurcation, 42);
    const auto c = generate_training_data(sys, 7950, Protocol::PreBifurcation, 43);
    CHECK(a.states == b.states);
    CHECK(a.times == b.times);
    CHECK(a.states.rows() == c.states.rows());
    CHECK(a.states != c.states);
}

TEST_CASE("system spec files") {
    const auto toy = load_system_spec(PSSM_CONFIG_DIR "/toy.sys");
    CHECK_FALSE(toy.is_surrogate());
    CHECK(toy.dimension() == 3);
    CHECK(toy.default_parameter() == -0.5);
    CHECK((toy.linearize(-0.2) - toy_model_field({-0.2, 1, -5}).linear_part()).norm() == 0.0);
    CHECK(toy.alpha(0.3) == doctest::Approx(0.3));

    const auto sur = load_system_spec(PSSM_CONFIG_DIR "/surrogate.sys");
    REQUIRE(sur.is_surrogate());
    CHECK(sur.dimension() == 64);
    CHECK(sur.alpha(8015) == 0.0);

    const auto small = parse_system_spec("system surrogate\ndimension 8\nseed 5\n");
    CHECK(small.dimension() == 8);
    CHECK(small.surrogate().config().seed == 5u);

    expect_error(ErrorCode::ParseError, [] { parse_system_spec("system polynomial\ndimension 2\nfrobnicate 3\n"); });
    expect_error(ErrorCode::ParseError, [] { parse_system_spec("dimension 2\n"); });
    expect_error(ErrorCode::ParseError, [] { parse_system_spec("system polynomial\ndimension 2\nterm 3 1 0 1\n"); });
    expect_error(ErrorCode::IoError, [] { load_system_spec("/nonexistent/x.sys"); });
}

}  // TEST_SUITE
