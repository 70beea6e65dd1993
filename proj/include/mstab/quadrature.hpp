#pragma once

// Deterministic adaptive quadrature: Gauss-Kronrod 7/15 with recursive
// bisection, plus a fixed non-adaptive GK7 for tiny smooth panels.

#include <functional>

namespace mstab::quad {

struct Result {
    double value = 0.0;
    double err_est = 0.0;
    long evals = 0;
    bool converged = true;
};

using Fn = std::function<double(double)>;

// Single GK15 panel; err is |K15 - G7| based.
void gk15_panel(const Fn& f, double a, double b, double& value, double& err, long& evals);

// Adaptive bisection to absolute tolerance.
Result integrate(const Fn& f, double a, double b, double abs_tol, int max_depth = 48);

// Fixed 7-point Gauss on one panel (no error estimate); for short panels
// whose smoothness is known a priori.
double gauss7(const Fn& f, double a, double b);

} // namespace mstab::quad
