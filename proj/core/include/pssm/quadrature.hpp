#pragma once

#include <functional>

namespace pssm {

struct QuadratureResult {
    double value = 0;
    double error = 0;
    int evaluations = 0;
    int subdivisions = 0;
};

/// Globally adaptive 7/15-point Gauss-Kronrod integration: the interval with
/// the largest error estimate is bisected until the summed estimate drops
/// below max(abs_tol, rel_tol * |integral|). Throws QuadratureFailure past max_subdivisions.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-10,
                                    int max_subdivisions = 60, double rel_tol = 0.0);

}  // namespace pssm
