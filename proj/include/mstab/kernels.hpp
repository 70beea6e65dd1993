#pragma once

// Inner-loop kernels for series evaluation, in two equivalence-tested
// flavors: a scalar reference (libm) and an AVX2 variant with vectorized
// exp/log. Selection happens once per process: MSTAB_KERNEL=auto|scalar|avx2
// or kernels::select(). All kernels accumulate lanes in a fixed order, so a
// given variant is bit-deterministic.

#include <cstddef>
#include <string>

namespace mstab::kernels {

struct Kernels {
    const char* name;

    // sum_{i<n} sign[i] * exp(p * g[i])
    double (*signed_exp_sum)(const double* g, const double* sign, size_t n, double p);

    // S = sum sign*exp(p*g), T = sum sign*g*exp(p*g)
    void (*signed_exp_sum2)(const double* g, const double* sign, size_t n, double p,
                            double* S, double* T);

    // out[i] = scale[i] * exp(q[i] * g[i])
    void (*scaled_exp)(const double* g, const double* q, const double* scale, size_t n,
                       double* out);

    // sum over {i : v[i] <= tmax} of sign[i] * exp(p * g[i])
    double (*masked_signed_exp_sum)(const double* g, const double* sign, const double* v,
                                    size_t n, double p, double tmax);

    // sum over {i : lo < v[i] <= hi} of scale[i] * exp(q[i] * g[i])
    double (*banded_scaled_exp_sum)(const double* g, const double* q, const double* scale,
                                    const double* v, size_t n, double lo, double hi);

    // out[i] = -log(u[i]), u[i] in (0,1)
    void (*neg_log)(const double* u, size_t n, double* out);
};

const Kernels& scalar();
const Kernels* avx2();     // nullptr when the CPU lacks AVX2+FMA
const Kernels& active();   // honors MSTAB_KERNEL on first use
void select(const std::string& mode); // "auto" | "scalar" | "avx2"

} // namespace mstab::kernels
