// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma (this file only);
// only reachable through the runtime dispatcher after a CPUID check.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "mstab/kernels.hpp"

namespace mstab::kernels {

namespace {

// ---- vectorized exp (double), Cody-Waite reduction + degree-13 Taylor ----

inline __m256d pow2_int(__m256d n) {
    // 2^n for integer-valued n with |n| <= ~600
    const __m128i i32 = _mm256_cvtpd_epi32(n);
    const __m256i i64 = _mm256_cvtepi32_epi64(i32);
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(i64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_castsi256_pd(bits);
}

inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

    x = _mm256_max_pd(x, _mm256_set1_pd(-745.0));
    x = _mm256_min_pd(x, _mm256_set1_pd(709.4));

    const __m256d n =
        _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
    r = _mm256_fnmadd_pd(n, ln2_lo, r);

    // exp(r) on |r| <= ln2/2, Taylor through r^13/13!
    __m256d p = _mm256_set1_pd(1.6059043836821614599e-10); // 1/13!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.0876756987868098979e-09));  // 1/12!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.5052108385441718775e-08));  // 1/11!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985890653e-07));  // 1/10!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.7557319223985892511e-06));  // 1/9!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(2.4801587301587301588e-05));  // 1/8!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.9841269841269841270e-04));  // 1/7!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.3888888888888888889e-03));  // 1/6!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(8.3333333333333333333e-03));  // 1/5!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(4.1666666666666666667e-02));  // 1/4!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.6666666666666666667e-01));  // 1/3!
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(5.0e-01));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // 2^n in two halves so intermediates stay representable
    const __m256d n1 = _mm256_round_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)),
                                       _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256d n2 = _mm256_sub_pd(n, n1);
    return _mm256_mul_pd(_mm256_mul_pd(p, pow2_int(n1)), pow2_int(n2));
}

// ---- vectorized log (double), for normal positive inputs ----

inline __m256d log_pd(__m256d x) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll);
    const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000ll);

    const __m256i xi = _mm256_castpd_si256(x);
    __m256i e64 = _mm256_sub_epi64(_mm256_srli_epi64(xi, 52), _mm256_set1_epi64x(1023));
    __m256d m = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(xi, mant_mask), one_bits)); // m in [1,2)

    // fold m into [sqrt(1/2)*? ] -> keep m in [sqrt(2)/2, sqrt(2))
    const __m256d sqrt2 = _mm256_set1_pd(1.4142135623730951);
    const __m256d gt = _mm256_cmp_pd(m, sqrt2, _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), gt);

    // e as double (+1 where folded)
    const __m256i lo32 = _mm256_shuffle_epi32(e64, _MM_SHUFFLE(2, 0, 2, 0));
    const __m128i packed =
        _mm_unpacklo_epi64(_mm256_castsi256_si128(lo32), _mm256_extracti128_si256(lo32, 1));
    __m256d e = _mm256_cvtepi32_pd(packed);
    e = _mm256_add_pd(e, _mm256_and_pd(gt, one));

    // atanh series: log(m) = 2t (1 + t^2/3 + ... + t^14/15), t = (m-1)/(m+1)
    const __m256d t = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d t2 = _mm256_mul_pd(t, t);
    __m256d p = _mm256_set1_pd(1.0 / 15.0);
    p = _mm256_fmadd_pd(p, t2, _mm256_set1_pd(1.0 / 13.0));
    p = _mm256_fmadd_pd(p, t2, _mm256_set1_pd(1.0 / 11.0));
    p = _mm256_fmadd_pd(p, t2, _mm256_set1_pd(1.0 / 9.0));
    p = _mm256_fmadd_pd(p, t2, _mm256_set1_pd(1.0 / 7.0));
    p = _mm256_fmadd_pd(p, t2, _mm256_set1_pd(1.0 / 5.0));
    p = _mm256_fmadd_pd(p, t2, _mm256_set1_pd(1.0 / 3.0));
    p = _mm256_fmadd_pd(p, t2, one);
    const __m256d lnm = _mm256_mul_pd(_mm256_add_pd(t, t), p);

    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
    const __m256d res = _mm256_fmadd_pd(e, ln2_lo, lnm);
    return _mm256_fmadd_pd(e, ln2_hi, res);
}

inline double hsum_ordered(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return ((lanes[0] + lanes[1]) + lanes[2]) + lanes[3];
}

// ---- kernels ----

double v_signed_exp_sum(const double* g, const double* sign, size_t n, double p) {
    const __m256d vp = _mm256_set1_pd(p);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e = exp_pd(_mm256_mul_pd(vp, _mm256_loadu_pd(g + i)));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(sign + i), e, acc);
    }
    double s = hsum_ordered(acc);
    for (; i < n; ++i) s += sign[i] * std::exp(p * g[i]);
    return s;
}

void v_signed_exp_sum2(const double* g, const double* sign, size_t n, double p, double* S,
                       double* T) {
    const __m256d vp = _mm256_set1_pd(p);
    __m256d acc_s = _mm256_setzero_pd(), acc_t = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d e = _mm256_mul_pd(_mm256_loadu_pd(sign + i), exp_pd(_mm256_mul_pd(vp, vg)));
        acc_s = _mm256_add_pd(acc_s, e);
        acc_t = _mm256_fmadd_pd(e, vg, acc_t);
    }
    double s = hsum_ordered(acc_s), t = hsum_ordered(acc_t);
    for (; i < n; ++i) {
        const double e = sign[i] * std::exp(p * g[i]);
        s += e;
        t += e * g[i];
    }
    *S = s;
    *T = t;
}

void v_scaled_exp(const double* g, const double* q, const double* scale, size_t n,
                  double* out) {
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e =
            exp_pd(_mm256_mul_pd(_mm256_loadu_pd(q + i), _mm256_loadu_pd(g + i)));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(scale + i), e));
    }
    for (; i < n; ++i) out[i] = scale[i] * std::exp(q[i] * g[i]);
}

double v_masked_signed_exp_sum(const double* g, const double* sign, const double* v, size_t n,
                               double p, double tmax) {
    const __m256d vp = _mm256_set1_pd(p);
    const __m256d vt = _mm256_set1_pd(tmax);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(v + i), vt, _CMP_LE_OQ);
        const __m256d sg = _mm256_and_pd(_mm256_loadu_pd(sign + i), mask);
        const __m256d e = exp_pd(_mm256_mul_pd(vp, _mm256_loadu_pd(g + i)));
        acc = _mm256_fmadd_pd(sg, e, acc);
    }
    double s = hsum_ordered(acc);
    for (; i < n; ++i)
        if (v[i] <= tmax) s += sign[i] * std::exp(p * g[i]);
    return s;
}

double v_banded_scaled_exp_sum(const double* g, const double* q, const double* scale,
                               const double* v, size_t n, double lo, double hi) {
    const __m256d vlo = _mm256_set1_pd(lo), vhi = _mm256_set1_pd(hi);
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vv = _mm256_loadu_pd(v + i);
        const __m256d mask = _mm256_and_pd(_mm256_cmp_pd(vv, vlo, _CMP_GT_OQ),
                                           _mm256_cmp_pd(vv, vhi, _CMP_LE_OQ));
        const __m256d sc = _mm256_and_pd(_mm256_loadu_pd(scale + i), mask);
        const __m256d e =
            exp_pd(_mm256_mul_pd(_mm256_loadu_pd(q + i), _mm256_loadu_pd(g + i)));
        acc = _mm256_fmadd_pd(sc, e, acc);
    }
    double s = hsum_ordered(acc);
    for (; i < n; ++i)
        if (v[i] > lo && v[i] <= hi) s += scale[i] * std::exp(q[i] * g[i]);
    return s;
}

void v_neg_log(const double* u, size_t n, double* out) {
    const __m256d neg = _mm256_set1_pd(-0.0);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d l = log_pd(_mm256_loadu_pd(u + i));
        _mm256_storeu_pd(out + i, _mm256_xor_pd(l, neg));
    }
    for (; i < n; ++i) out[i] = -std::log(u[i]);
}

} // namespace

const Kernels* avx2() {
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
    static const Kernels k = {
        "avx2",
        v_signed_exp_sum,
        v_signed_exp_sum2,
        v_scaled_exp,
        v_masked_signed_exp_sum,
        v_banded_scaled_exp_sum,
        v_neg_log,
    };
    return &k;
}

} // namespace mstab::kernels

#else

#include "mstab/kernels.hpp"

namespace mstab::kernels {
const Kernels* avx2() { return nullptr; }
} // namespace mstab::kernels

#endif
