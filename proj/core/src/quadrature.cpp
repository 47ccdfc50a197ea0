#include "pssm/quadrature.hpp"

#include "pssm/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>

namespace pssm {

namespace {

// Kronrod nodes on [0, 1] of the symmetric 15-point rule; odd entries are the
// Gauss nodes.
constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780, 0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gauss_kronrod(const std::function<double(double)>& f, double a, double b, int& evals) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double k = kKronrod[7] * fc;
    double g = kGauss[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kNodes[static_cast<std::size_t>(i)];
        const double s = f(c - dx) + f(c + dx);
        k += kKronrod[static_cast<std::size_t>(i)] * s;
        if (i % 2 == 1) g += kGauss[static_cast<std::size_t>(i / 2)] * s;
    }
    evals += 15;
    k *= h;
    g *= h;
    return {a, b, k, std::abs(k - g)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                                    int max_subdivisions, double rel_tol) {
    QuadratureResult out;
    if (a == b) return out;
    std::priority_queue<Piece> heap;
    heap.push(gauss_kronrod(f, a, b, out.evaluations));
    double total = heap.top().value, err = heap.top().error;
    auto target = [&] { return std::max(abs_tol, rel_tol * std::abs(total)); };
    while (err > target()) {
        if (out.subdivisions >= max_subdivisions) {
            std::ostringstream msg;
            msg << "error estimate " << err << " above tolerance " << target() << " after " << out.subdivisions
                << " subdivisions";
            throw Error(ErrorCode::QuadratureFailure, msg.str());
        }
        const Piece worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Piece left = gauss_kronrod(f, worst.a, mid, out.evaluations);
        const Piece right = gauss_kronrod(f, mid, worst.b, out.evaluations);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++out.subdivisions;
    }
    if (!std::isfinite(total)) throw Error(ErrorCode::QuadratureFailure, "non-finite integral");
    // re-sum to drop accumulated cancellation from the running updates
    out.value = 0;
    out.error = 0;
    while (!heap.empty()) {
        out.value += heap.top().value;
        out.error += heap.top().error;
        heap.pop();
    }
    return out;
}

}  // namespace pssm
