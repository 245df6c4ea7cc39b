#pragma once

#include <functional>

namespace sublin {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = false;
    long evaluations = 0;
};

// Adaptive Gauss-Kronrod (G7/K15) on a finite interval.  Subdivides until
// the summed K-G error estimate is below abs_tol or the depth cap is hit.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, int max_depth = 40);

// Behaviour of an integral over [start, +inf), probed by geometric shells
// [start*g^m, start*g^(m+1)].  `sign` is the sign of the divergent part
// (0 when the recent shells do not agree on one).
struct TailResult {
    double value = 0.0;
    bool divergent = false;
    int sign = 0;
    bool converged = false;
};

TailResult integrate_tail(const std::function<double(double)>& f, double start,
                          double growth, double abs_tol, int max_shells = 160);

} // namespace sublin
