#include "pssm/cohomology.hpp"

#include "pssm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pssm {

namespace {

// Rotates v so its dominant entry is real positive and scales ||v|| = 1/sqrt(2),
// which makes the realified pair (2 Re v, -2 Im v) carry unit mean column norm.
Eigen::VectorXcd normalize_pair_vector(Eigen::VectorXcd v) {
    const double vmax = v.cwiseAbs().maxCoeff();
    Eigen::Index j = 0;
    while (std::abs(v(j)) < (1.0 - 1e-6) * vmax) ++j;
    v *= std::conj(v(j)) / std::abs(v(j));
    v *= (1.0 / std::numbers::sqrt2) / v.norm();
    return v;
}

Eigen::VectorXd normalize_real_vector(const Eigen::VectorXcd& vc) {
    Eigen::VectorXd v = vc.real();
    v.normalize();
    const double vmax = v.cwiseAbs().maxCoeff();
    Eigen::Index j = 0;
    while (std::abs(v(j)) < (1.0 - 1e-6) * vmax) ++j;
    if (v(j) < 0) v = -v;
    return v;
}

}  // namespace

EigenFrame build_eigenframe(const Eigen::MatrixXd& A, const Spectrum& subspace) {
    if (A.rows() != A.cols() || A.rows() < 3) throw Error(ErrorCode::NonSquare, "linear part must be square with N >= 3");
    const Eigen::Index n = A.rows();
    if (static_cast<Eigen::Index>(subspace.eigenvalues.size()) != n)
        throw Error(ErrorCode::InvalidArgument, "spectrum size does not match the matrix");

    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, true);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "eigen-decomposition failed");
    const Eigen::VectorXcd ev = solver.eigenvalues();
    const Eigen::MatrixXcd vecs = solver.eigenvectors();

    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(ev(i) - ev(j)) <= kCollisionTol * std::max(1.0, std::abs(ev(i)))) {
                std::ostringstream msg;
                msg << "eigenvalues " << ev(i) << " and " << ev(j) << " coincide";
                throw Error(ErrorCode::EigenvalueCollision, msg.str());
            }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(vecs);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(sv.size() - 1);
    if (!std::isfinite(cond) || cond > kDefectiveCondition)
        throw Error(ErrorCode::DefectiveLinearPart, "eigenvector matrix is numerically singular");

    // locate the selected pair member with positive imaginary part
    const Complex l1 = subspace.lambda1();
    Eigen::Index ip = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs(ev(i) - l1) < std::abs(ev(ip) - l1)) ip = i;
    if (ev(ip).imag() <= 0) throw Error(ErrorCode::NoConjugatePair, "selected pair is not complex");
    Eigen::Index ic = -1;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != ip && (ic < 0 || std::abs(ev(i) - std::conj(ev(ip))) < std::abs(ev(ic) - std::conj(ev(ip))))) ic = i;

    std::vector<Eigen::Index> outer;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != ip && i != ic) outer.push_back(i);
    std::sort(outer.begin(), outer.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
        return ev(a).imag() > ev(b).imag();
    });

    EigenFrame frame;
    frame.spectrum = subspace;
    frame.condition_number = cond;
    frame.T.resize(n, n);
    frame.lambda.resize(n);
    frame.S_u.resize(n, 2);
    frame.S_v.resize(n, n - 2);
    frame.A_v = Eigen::MatrixXd::Zero(n - 2, n - 2);

    const Eigen::VectorXcd v1 = normalize_pair_vector(vecs.col(ip));
    frame.S_u.col(0) = 2.0 * v1.real();
    frame.S_u.col(1) = -2.0 * v1.imag();
    const double alpha = ev(ip).real(), omega = ev(ip).imag();
    frame.A_u << alpha, -omega, omega, alpha;
    frame.T.col(0) = v1;
    frame.T.col(1) = v1.conjugate();
    frame.lambda(0) = Complex(alpha, omega);
    frame.lambda(1) = Complex(alpha, -omega);

    // outer eigenvalues: pairs are consumed at their positive-imaginary member
    std::vector<bool> done(static_cast<std::size_t>(n), false);
    Eigen::Index col = 0;
    for (Eigen::Index i : outer) {
        if (done[static_cast<std::size_t>(i)]) continue;
        const Complex lam = ev(i);
        if (lam.imag() == 0.0) {
            const Eigen::VectorXd s = normalize_real_vector(vecs.col(i));
            frame.S_v.col(col) = s;
            frame.T.col(2 + col) = s.cast<Complex>();
            frame.lambda(2 + col) = Complex(lam.real(), 0.0);
            frame.A_v(col, col) = lam.real();
            frame.outer_layout.emplace_back(static_cast<int>(col), 0);
            done[static_cast<std::size_t>(i)] = true;
            ++col;
            continue;
        }
        Eigen::Index partner = -1;
        for (Eigen::Index j : outer)
            if (j != i && !done[static_cast<std::size_t>(j)] &&
                (partner < 0 || std::abs(ev(j) - std::conj(lam)) < std::abs(ev(partner) - std::conj(lam))))
                partner = j;
        if (partner < 0) throw Error(ErrorCode::NoConjugatePair, "outer complex eigenvalue without partner");
        const Eigen::Index ipos = lam.imag() > 0 ? i : partner;
        const Complex lp = ev(ipos);
        const Eigen::VectorXcd v = normalize_pair_vector(vecs.col(ipos));
        frame.S_v.col(col) = 2.0 * v.real();
        frame.S_v.col(col + 1) = -2.0 * v.imag();
        frame.T.col(2 + col) = v;
        frame.T.col(3 + col) = v.conjugate();
        frame.lambda(2 + col) = Complex(lp.real(), std::abs(lp.imag()));
        frame.lambda(3 + col) = Complex(lp.real(), -std::abs(lp.imag()));
        frame.A_v(col, col) = lp.real();
        frame.A_v(col, col + 1) = -std::abs(lp.imag());
        frame.A_v(col + 1, col) = std::abs(lp.imag());
        frame.A_v(col + 1, col + 1) = lp.real();
        frame.outer_layout.emplace_back(static_cast<int>(col), +1);
        frame.outer_layout.emplace_back(static_cast<int>(col + 1), -1);
        done[static_cast<std::size_t>(i)] = done[static_cast<std::size_t>(partner)] = true;
        col += 2;
    }
    frame.T_inv = frame.T.partialPivLu().inverse();
    return frame;
}

Eigen::VectorXd SsmExpansion::lift(const Eigen::Vector2d& xi) const {
    return frame.S_u * xi + manifold(xi);
}

// ---------------------------------------------------------------------------
// Dense complex polynomials in (u, conj u), all degrees 0..D, graded-lex layout.

namespace {

using CPoly = Eigen::VectorXcd;

struct PolyAlgebra {
    int D;
    std::vector<Exponent2> exps;

    explicit PolyAlgebra(int max_degree) : D(max_degree), exps(monomials(0, max_degree)) {}

    Eigen::Index size() const { return static_cast<Eigen::Index>(exps.size()); }
    CPoly zero() const { return CPoly::Zero(size()); }

    CPoly multiply(const CPoly& a, const CPoly& b, int trunc) const {
        CPoly out = zero();
        const Eigen::Index na = monomial_count(0, trunc);
        for (Eigen::Index i = 0; i < na; ++i) {
            if (a(i) == Complex(0)) continue;
            const Exponent2 ka = exps[static_cast<std::size_t>(i)];
            const Eigen::Index nb = monomial_count(0, trunc - ka.degree());
            for (Eigen::Index j = 0; j < nb; ++j) {
                if (b(j) == Complex(0)) continue;
                const Exponent2 kb = exps[static_cast<std::size_t>(j)];
                out(monomial_index({ka.k1 + kb.k1, ka.k2 + kb.k2}, 0)) += a(i) * b(j);
            }
        }
        return out;
    }

    CPoly derivative(const CPoly& a, int var) const {
        CPoly out = zero();
        for (Eigen::Index i = 0; i < size(); ++i) {
            const Exponent2 k = exps[static_cast<std::size_t>(i)];
            const int p = var == 0 ? k.k1 : k.k2;
            if (p == 0 || a(i) == Complex(0)) continue;
            const Exponent2 lower = var == 0 ? Exponent2{k.k1 - 1, k.k2} : Exponent2{k.k1, k.k2 - 1};
            out(monomial_index(lower, 0)) += static_cast<double>(p) * a(i);
        }
        return out;
    }

    void truncate(CPoly& a, int trunc) const {
        const Eigen::Index keep = monomial_count(0, trunc);
        if (keep < size()) a.tail(size() - keep).setZero();
    }
};

// T^{-1} f0(T q(u)) truncated at degree `trunc`, with q = (u, conj u, h).
Eigen::MatrixXcd compose_nonlinearity(const PolyAlgebra& alg, const PolyVectorField& f0, const EigenFrame& frame,
                                      const std::vector<CPoly>& h, int trunc) {
    const int n = frame.dimension();
    std::vector<CPoly> q(static_cast<std::size_t>(n), alg.zero());
    q[0](monomial_index({1, 0}, 0)) = 1.0;
    q[1](monomial_index({0, 1}, 0)) = 1.0;
    for (int l = 0; l < n - 2; ++l) q[static_cast<std::size_t>(l + 2)] = h[static_cast<std::size_t>(l)];

    std::vector<CPoly> x(static_cast<std::size_t>(n), alg.zero());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (frame.T(i, j) != Complex(0)) x[static_cast<std::size_t>(i)] += frame.T(i, j) * q[static_cast<std::size_t>(j)];

    // powers[j][p] = x_j^p, built lazily
    std::vector<std::vector<CPoly>> powers(static_cast<std::size_t>(n));
    auto power = [&](int j, int p) -> const CPoly& {
        auto& cache = powers[static_cast<std::size_t>(j)];
        if (cache.empty()) {
            CPoly one = alg.zero();
            one(0) = 1.0;
            cache.push_back(one);
        }
        while (static_cast<int>(cache.size()) <= p) cache.push_back(alg.multiply(cache.back(), x[static_cast<std::size_t>(j)], trunc));
        return cache[static_cast<std::size_t>(p)];
    };

    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, alg.size());
    for (const auto& [e, c] : f0.terms()) {
        if (total_degree(e) > trunc) continue;
        CPoly mono;
        bool first = true;
        for (int j = 0; j < n; ++j) {
            if (e[static_cast<std::size_t>(j)] == 0) continue;
            const CPoly& pj = power(j, e[static_cast<std::size_t>(j)]);
            mono = first ? pj : alg.multiply(mono, pj, trunc);
            first = false;
        }
        for (int i = 0; i < n; ++i)
            if (c(i) != 0.0) acc.row(i) += c(i) * mono.transpose();
    }
    return frame.T_inv * acc;
}

// Coefficients over monomials(lo, hi) extracted from a dense 0..D polynomial.
Eigen::RowVectorXcd slice(const CPoly& a, int lo, int hi) {
    return a.segment(monomial_count(0, lo - 1), monomial_count(lo, hi)).transpose();
}

const Eigen::Matrix2cd& realify_map() {
    static const Eigen::Matrix2cd M = [] {
        Eigen::Matrix2cd m;
        m << Complex(1, 0), Complex(0, 1), Complex(1, 0), Complex(0, -1);
        return m;
    }();
    return M;
}

}  // namespace

SsmExpansion solve_ssm(const PolyVectorField& field, const EigenFrame& frame, int order, double res_tol) {
    if (order < 2) throw Error(ErrorCode::InvalidArgument, "expansion order must be at least 2");
    if (field.dimension() != frame.dimension()) throw Error(ErrorCode::InvalidArgument, "field and frame dimensions differ");
    const int n = frame.dimension();
    const int nv = n - 2;
    const Complex l1 = frame.lambda(0), l2 = frame.lambda(1);

    // every L_k must be invertible up to order K
    for (int d = 2; d <= order; ++d)
        for (int k1 = d; k1 >= 0; --k1) {
            const int k2 = d - k1;
            for (int l = 0; l < nv; ++l) {
                const Complex lam = frame.lambda(2 + l);
                const double gap = std::abs(lam - (static_cast<double>(k1) * l1 + static_cast<double>(k2) * l2)) / std::abs(lam);
                if (gap < res_tol) {
                    std::ostringstream msg;
                    msg << "resonance of order " << d << " at multi-index (" << k1 << "," << k2 << ") with outer eigenvalue "
                        << lam << " (relative gap " << gap << ")";
                    throw ResonantOrderError(k1, k2, l, gap, msg.str());
                }
            }
        }

    const PolyVectorField f0 = field.nonlinear_part();
    const PolyAlgebra alg(order + 1);
    std::vector<CPoly> h(static_cast<std::size_t>(nv), alg.zero());

    for (int d = 2; d <= order; ++d) {
        const Eigen::MatrixXcd g = compose_nonlinearity(alg, f0, frame, h, d);
        const CPoly g_u = g.row(0).transpose();
        const CPoly g_ubar = g.row(1).transpose();
        for (int l = 0; l < nv; ++l) {
            const CPoly& hl = h[static_cast<std::size_t>(l)];
            const CPoly transport = alg.multiply(alg.derivative(hl, 0), g_u, d) + alg.multiply(alg.derivative(hl, 1), g_ubar, d);
            const Complex lam = frame.lambda(2 + l);
            CPoly& target = h[static_cast<std::size_t>(l)];
            for (int k1 = d; k1 >= 0; --k1) {
                const int k2 = d - k1;
                const Eigen::Index idx = monomial_index({k1, k2}, 0);
                const Complex L = lam - (static_cast<double>(k1) * l1 + static_cast<double>(k2) * l2);
                target(idx) = (transport(idx) - g(2 + l, idx)) / L;
            }
        }
    }

    const Eigen::MatrixXcd g_final = compose_nonlinearity(alg, f0, frame, h, order + 1);
    CPoly r = g_final.row(0).transpose();
    alg.truncate(r, order + 1);
    r(monomial_index({1, 0}, 0)) += l1;

    SsmExpansion out;
    out.order = order;
    out.frame = frame;
    out.complex_graph.resize(nv, monomial_count(2, order));
    for (int l = 0; l < nv; ++l) out.complex_graph.row(l) = slice(h[static_cast<std::size_t>(l)], 2, order);
    out.complex_reduced = slice(r, 1, order + 1);

    const Eigen::MatrixXcd graph_xi = substitute_linear<Complex>(out.complex_graph, 2, order, realify_map());
    Eigen::MatrixXd graph(nv, graph_xi.cols());
    for (int l = 0; l < nv; ++l) {
        const auto [c, kind] = frame.outer_layout[static_cast<std::size_t>(l)];
        if (kind == 0) {
            graph.row(c) = graph_xi.row(l).real();
        } else if (kind > 0) {
            graph.row(c) = graph_xi.row(l).real();
            graph.row(c + 1) = graph_xi.row(l).imag();
        }
    }
    out.graph = Poly2(2, order, graph);
    out.manifold = out.graph.left_multiply(frame.S_v);

    const Eigen::MatrixXcd red_xi = substitute_linear<Complex>(Eigen::MatrixXcd(out.complex_reduced), 1, order + 1, realify_map());
    Eigen::MatrixXd red(2, red_xi.cols());
    red.row(0) = red_xi.row(0).real();
    red.row(1) = red_xi.row(0).imag();
    out.reduced = Poly2(1, order + 1, red);
    return out;
}

double invariance_residual(const PolyVectorField& field, const SsmExpansion& expansion, double radius, int n_samples) {
    if (!(radius > 0)) throw Error(ErrorCode::InvalidArgument, "radius must be positive");
    const auto& fr = expansion.frame;
    const int n = fr.dimension();
    Eigen::MatrixXd P(n, n);
    P << fr.S_u, fr.S_v;
    const auto lu = P.partialPivLu();

    double worst = 0.0;
    const int rings = 2;
    for (int ring = 1; ring <= rings; ++ring) {
        const double r = radius * ring / rings;
        for (int s = 0; s < n_samples; ++s) {
            const double th = 2.0 * std::numbers::pi * s / n_samples;
            const Eigen::Vector2d xi(r * std::cos(th), r * std::sin(th));
            const Eigen::VectorXd eta = expansion.graph(xi);
            const Eigen::VectorXd x = fr.S_u * xi + fr.S_v * eta;
            const Eigen::VectorXd rates = lu.solve(field(x));
            const Eigen::VectorXd res = rates.tail(n - 2) - expansion.graph.jacobian(xi) * rates.head(2);
            worst = std::max(worst, res.norm());
        }
    }
    return worst;
}

SsmExpansion apply_gauge(const SsmExpansion& e, const Eigen::Matrix2d& Q) {
    SsmExpansion out = e;
    out.frame.S_u = e.frame.S_u * Q;
    out.frame.A_u = Q.transpose() * e.frame.A_u * Q;
    out.graph = e.graph.compose_linear(Q);
    out.manifold = e.manifold.compose_linear(Q);
    out.reduced = e.reduced.compose_linear(Q).left_multiply(Q.transpose());
    // complex coefficients refer to the original gauge only
    out.complex_graph.resize(0, 0);
    out.complex_reduced.resize(0);
    return out;
}

}  // namespace pssm
