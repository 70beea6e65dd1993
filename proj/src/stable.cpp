#include "mstab/stable.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mstab/quadrature.hpp"

namespace mstab::stable {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double c_alpha(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw std::domain_error("c_alpha: alpha must lie in (0,2), got " + std::to_string(alpha));
    const double d = 1.0 - alpha;
    if (d == 0.0) return 2.0 / kPi; // removable singularity of the closed form
    // (1-alpha)/(Gamma(2-alpha) cos(pi alpha/2)) with cos(pi alpha/2) written
    // as sin(pi(1-alpha)/2) to avoid cancellation near alpha = 1.
    const double inner = d / (std::tgamma(1.0 + d) * std::sin(0.5 * kPi * d));
    return std::pow(inner, 1.0 / alpha);
}

double h(double v) { return c_alpha(v); }

double h_prime(double v) {
    if (!(v > 0.0) || !(v < 2.0))
        throw std::domain_error("h_prime: v must lie in (0,2), got " + std::to_string(v));
    const double step = 1e-5;
    const double hi = std::min(2.0 - 1e-9, v + step), lo = std::max(1e-9, v - step);
    const double h1 = (c_alpha(hi) - c_alpha(lo)) / (hi - lo);
    const double hi2 = std::min(2.0 - 1e-9, v + 0.5 * step), lo2 = std::max(1e-9, v - 0.5 * step);
    const double h2 = (c_alpha(hi2) - c_alpha(lo2)) / (hi2 - lo2);
    return (4.0 * h2 - h1) / 3.0;
}

CharFnQuery::CharFnQuery(double s_, double t_, double theta_) : s(s_), t(t_), theta(theta_) {
    if (!(s >= 0.0) || !(t <= 1.0) || !(s <= t))
        throw std::invalid_argument("CharFnQuery requires 0 <= s <= t <= 1");
}

double log_phi_X_marginal(const AlphaFunction& alpha, double t, double theta) {
    if (!(t >= 0.0) || !(t <= 1.0))
        throw std::invalid_argument("log_phi_X_marginal: t must lie in [0,1]");
    if (theta == 0.0 || t == 0.0) return 0.0;
    return -t * std::pow(std::fabs(theta), alpha(t));
}

double log_phi_Z_increment(const AlphaFunction& alpha, const CharFnQuery& q) {
    if (q.theta == 0.0 || q.s == q.t) return 0.0;
    const double at = std::fabs(q.theta);
    if (alpha.is_constant()) return -(q.t - q.s) * std::pow(at, alpha(0.0));
    const double lt = std::log(at);
    auto res = quad::integrate([&](double u) { return std::exp(alpha(u) * lt); },
                               q.s, q.t, 1e-9);
    return -res.value;
}

namespace {

// Phase of the head integrand after u = y^(-1/alpha_min):
//   phi(u) = theta (C_t u^(r_t) - C_s u^(r_s)), r_x = alpha_min/alpha_x,
// exactly one of r_s, r_t equals 1.
struct HeadPhase {
    double theta, cs, ct, rs, rt;
    double operator()(double u) const {
        return theta * (ct * std::pow(u, rt) - cs * std::pow(u, rs));
    }
    double deriv(double u) const {
        return theta * (ct * rt * std::pow(u, rt - 1.0) - cs * rs * std::pow(u, rs - 1.0));
    }
    double deriv_bound() const { return std::fabs(theta) * (ct * rt + cs * rs); }
};

} // namespace

double x_increment_sin2_integral(double alpha_s, double alpha_t, double theta,
                                 double abs_tol) {
    theta = std::fabs(theta);
    if (theta == 0.0 || alpha_s == alpha_t) return 0.0;

    const double cs = c_alpha(alpha_s), ct = c_alpha(alpha_t);
    const double amin = std::min(alpha_s, alpha_t);
    const double amax = std::max(alpha_s, alpha_t);
    auto arg = [&](double y) {
        return 0.5 * theta * (ct * std::pow(y, -1.0 / alpha_t) - cs * std::pow(y, -1.0 / alpha_s));
    };

    // Oscillation is confined below y0: for y >= y0 the argument stays under
    // pi/4 in magnitude.
    const double env0 = 0.5 * theta * (cs + ct);
    double y0 = std::pow(std::max(1.0, env0 * 4.0 / kPi), amax);
    y0 = std::max(y0, 1.0);

    // Small-angle region starts where (theta^2/4) dK^2 <= 1e-12 pointwise.
    double ycut = std::pow(std::max(1.0, env0 * 1e6), amax);
    ycut = std::max(ycut, 2.0 * y0);

    double total = 0.0;

    // --- head (0, y0]: sin^2 = 1/2 - cos(2A)/2, substitute u = y^(-1/amin),
    // which maps (0, y0] onto [ustart, inf) with ustart = y0^(-1/amin) <= 1.
    // One of the phase exponents is exactly 1, so the phase grows linearly
    // and the algebraic envelope u^(-amin-1) makes the remainder boundable.
    {
        const HeadPhase ph{theta, cs, ct, amin / alpha_s, amin / alpha_t};
        const double ustart = std::pow(y0, -1.0 / amin);
        // J = integral_{ustart}^inf cos(phi(u)) u^(-amin-1) du
        const double tolJ = std::max(1e-14, abs_tol / amin);
        // left-end |phi'| bounds the panel since u^(r-1) is nonincreasing
        auto local_rate = [&](double u) {
            return std::fabs(theta) * (ct * ph.rt * std::pow(u, ph.rt - 1.0) +
                                       cs * ph.rs * std::pow(u, ph.rs - 1.0));
        };
        double J = 0.0;
        double u = ustart;
        long guard = 0;
        while (true) {
            const double width = 0.5 * kPi / std::max(local_rate(u), 1e-9);
            const double ub = u + width;
            J += quad::gauss7(
                [&](double x) { return std::cos(ph(x)) * std::pow(x, -amin - 1.0); }, u, ub);
            u = ub;
            const double dphi = std::fabs(ph.deriv(u));
            const double rem = 4.0 * std::pow(u, -amin - 1.0) / std::max(dphi, 1e-300);
            const double env_rem = std::pow(u, -amin) / amin; // |cos| <= 1 fallback
            if (std::min(rem, env_rem) < tolJ && u > 2.0 * ustart) break;
            if (++guard > 4000000) break;
        }
        // integral_0^{y0} sin^2(A) dy = y0/2 - (amin/2) J
        total += 0.5 * y0 - 0.5 * amin * J;
    }

    // --- midrange [y0, ycut]: no oscillation, geometric panels + adaptive GK.
    {
        auto f = [&](double y) {
            const double a = std::sin(arg(y));
            return a * a;
        };
        double lo = y0;
        const double tol_mid = 0.25 * abs_tol;
        int panels = 0;
        double span = ycut / y0;
        while (span > 1.0) {
            ++panels;
            span /= 4.0;
        }
        panels = std::max(panels, 1);
        double acc = 0.0;
        for (int k = 0; k < panels && lo < ycut; ++k) {
            const double hi = (k + 1 == panels) ? ycut : std::min(ycut, lo * 4.0);
            acc += quad::integrate(f, lo, hi, tol_mid / panels).value;
            lo = hi;
        }
        total += acc;
    }

    // --- tail [ycut, inf): sin^2(x) ~ x^2 with relative error <= 1e-12 here;
    // integral of (theta/2)^2 (C_t y^(-1/at) - C_s y^(-1/as))^2 in closed form.
    {
        const double q2t = 2.0 / alpha_t, q2s = 2.0 / alpha_s, qst = 1.0 / alpha_t + 1.0 / alpha_s;
        const double Y = ycut;
        const double tail = 0.25 * theta * theta *
                            (ct * ct * std::pow(Y, 1.0 - q2t) / (q2t - 1.0) -
                             2.0 * cs * ct * std::pow(Y, 1.0 - qst) / (qst - 1.0) +
                             cs * cs * std::pow(Y, 1.0 - q2s) / (q2s - 1.0));
        total += std::max(0.0, tail);
    }

    return total;
}

double log_phi_X_increment(const AlphaFunction& alpha, const CharFnQuery& q) {
    if (q.theta == 0.0 || q.s == q.t) return 0.0;
    const double at = alpha(q.t), as = alpha(q.s);
    const double theta = std::fabs(q.theta);
    const double stationary = -(q.t - q.s) * std::pow(theta, at);
    if (q.s == 0.0 || as == at) return stationary;
    return -2.0 * q.s * x_increment_sin2_integral(as, at, theta) + stationary;
}

} // namespace mstab::stable
