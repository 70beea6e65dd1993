#include "mstab/kernels.hpp"

#include <cmath>

// Reference kernels: plain loops over libm. These define the semantics the
// SIMD variants are tested against.

namespace mstab::kernels {

namespace {

double s_signed_exp_sum(const double* g, const double* sign, size_t n, double p) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += sign[i] * std::exp(p * g[i]);
    return s;
}

void s_signed_exp_sum2(const double* g, const double* sign, size_t n, double p, double* S,
                       double* T) {
    double s = 0.0, t = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double e = sign[i] * std::exp(p * g[i]);
        s += e;
        t += e * g[i];
    }
    *S = s;
    *T = t;
}

void s_scaled_exp(const double* g, const double* q, const double* scale, size_t n,
                  double* out) {
    for (size_t i = 0; i < n; ++i) out[i] = scale[i] * std::exp(q[i] * g[i]);
}

double s_masked_signed_exp_sum(const double* g, const double* sign, const double* v, size_t n,
                               double p, double tmax) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (v[i] <= tmax) s += sign[i] * std::exp(p * g[i]);
    return s;
}

double s_banded_scaled_exp_sum(const double* g, const double* q, const double* scale,
                               const double* v, size_t n, double lo, double hi) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (v[i] > lo && v[i] <= hi) s += scale[i] * std::exp(q[i] * g[i]);
    return s;
}

void s_neg_log(const double* u, size_t n, double* out) {
    for (size_t i = 0; i < n; ++i) out[i] = -std::log(u[i]);
}

} // namespace

const Kernels& scalar() {
    static const Kernels k = {
        "scalar",
        s_signed_exp_sum,
        s_signed_exp_sum2,
        s_scaled_exp,
        s_masked_signed_exp_sum,
        s_banded_scaled_exp_sum,
        s_neg_log,
    };
    return k;
}

} // namespace mstab::kernels
