#pragma once

// Analytic kernels for symmetric stable laws with a time-varying index:
// the series normalizing constant C_alpha, its functional form h with
// derivative, and log characteristic functions of increments of the two
// process constructions.

#include "mstab/alpha.hpp"

namespace mstab::stable {

// C_alpha = (integral_0^inf x^(-alpha) sin x dx)^(-1/alpha), alpha in (0,2).
// Evaluated through the closed form ((1-alpha)/(Gamma(2-alpha) cos(pi
// alpha/2)))^(1/alpha), rewritten to stay well-conditioned across alpha = 1
// where the limit value is 2/pi. Throws std::domain_error outside (0,2).
double c_alpha(double alpha);

// h(v) = c_alpha(v) on (0,2); h_prime is a Richardson-extrapolated central
// difference with base step 1e-5.
double h(double v);
double h_prime(double v);

struct CharFnQuery {
    double s = 0.0;
    double t = 0.0;
    double theta = 0.0;
    CharFnQuery(double s_, double t_, double theta_);
};

// log E[exp(i theta X(t))] = -t |theta|^alpha(t)
double log_phi_X_marginal(const AlphaFunction& alpha, double t, double theta);

// log phi of Z(t)-Z(s): -(integral_s^t |theta|^alpha(u) du), adaptive
// quadrature to 1e-9 absolute.
double log_phi_Z_increment(const AlphaFunction& alpha, const CharFnQuery& q);

// log phi of X(t)-X(s):
//   -2 s * integral_0^inf sin^2((theta/2)[C_a(t) y^(-1/a(t)) - C_a(s)
//   y^(-1/a(s))]) dy  - (t-s)|theta|^a(t)
// The improper integral is evaluated exactly: oscillatory head by phase
// marching after u = y^(-1/alpha_min), smooth midrange by adaptive GK, and
// the small-angle tail in closed form.
double log_phi_X_increment(const AlphaFunction& alpha, const CharFnQuery& q);

// The sin^2 y-integral alone (exposed for tests).
double x_increment_sin2_integral(double alpha_s, double alpha_t, double theta,
                                 double abs_tol = 1e-8);

} // namespace mstab::stable
