#include "mstab/series.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mstab/kernels.hpp"
#include "mstab/quadrature.hpp"
#include "mstab/rng.hpp"
#include "mstab/stable.hpp"

namespace mstab::series {

ProcessTag tag_from_char(char c) {
    switch (c) {
        case 'L': return ProcessTag::L;
        case 'X': return ProcessTag::X;
        case 'Z': return ProcessTag::Z;
        case 'Y': return ProcessTag::Y;
        case 'D': return ProcessTag::D;
    }
    throw std::invalid_argument(std::string("unknown process tag '") + c + "'");
}

void generate_into(uint64_t seed, size_t n, SeriesRealization& r, bool sorted_views) {
    if (n < 1) throw std::invalid_argument("term count must be >= 1");
    if (n > kMaxTerms) throw std::length_error("term count exceeds the 1e8 guard");
    const auto& k = kernels::active();

    r.seed = seed;
    r.n = n;
    r.gamma.resize(n);
    r.log_gamma.resize(n);
    r.v.resize(n);
    r.sign.resize(n);

    const rng::Counter arrivals(seed, rng::Stream::Arrivals);
    const rng::Counter locations(seed, rng::Stream::Locations);
    const rng::Counter signs(seed, rng::Stream::Signs);

    // exponential spacings: u into gamma, then -log in place
    for (size_t i = 0; i < n; ++i) r.gamma[i] = arrivals.u01(i);
    k.neg_log(r.gamma.data(), n, r.gamma.data());
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        acc += r.gamma[i];
        if (i > 0 && acc <= r.gamma[i - 1])
            acc = std::nextafter(r.gamma[i - 1], 2.0 * r.gamma[i - 1] + 1.0);
        r.gamma[i] = acc;
    }
    k.neg_log(r.gamma.data(), n, r.log_gamma.data());
    for (size_t i = 0; i < n; ++i) r.log_gamma[i] = -r.log_gamma[i];

    for (size_t i = 0; i < n; ++i) r.v[i] = locations.u01(i);

    // 64 signs per counter word
    for (size_t i = 0; i < n; i += 64) {
        const uint64_t w = signs.word(i / 64);
        const size_t m = std::min<size_t>(64, n - i);
        for (size_t b = 0; b < m; ++b) r.sign[i + b] = (w >> b) & 1 ? 1.0 : -1.0;
    }

    if (!sorted_views) {
        r.v_sorted.clear();
        r.g_by_v.clear();
        r.sign_by_v.clear();
        return;
    }

    // jump-location order
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](uint32_t a, uint32_t b) { return r.v[a] < r.v[b]; });
    r.v_sorted.resize(n);
    r.g_by_v.resize(n);
    r.sign_by_v.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const uint32_t j = order[i];
        r.v_sorted[i] = r.v[j];
        r.g_by_v[i] = r.log_gamma[j];
        r.sign_by_v[i] = r.sign[j];
    }
}

SeriesRealization generate(uint64_t seed, size_t n) {
    SeriesRealization r;
    generate_into(seed, n, r);
    return r;
}

// ---- AlphaTables ----

namespace {
constexpr int kTableSize = 4097; // nodes on [0,1], 4096 cells
}

AlphaTables::AlphaTables(const AlphaFunction& alpha) : alpha_(alpha) {
    if (alpha_.is_constant()) {
        h_const_ = stable::h(alpha_(0.0));
        hp_const_ = stable::h_prime(alpha_(0.0));
        return;
    }
    hv_.resize(kTableSize);
    hd_.resize(kTableSize);
    pv_.resize(kTableSize);
    pd_.resize(kTableSize);
    const double dt = 1.0 / (kTableSize - 1);
    for (int i = 0; i < kTableSize; ++i) {
        const double t = i * dt;
        const double a = alpha_(t);
        const double hp = stable::h_prime(a);
        hv_[i] = stable::h(a);
        pv_[i] = hp;
        hd_[i] = hp * alpha_.deriv(t); // d/dt h(alpha(t))
    }
    // derivative of h'(alpha(t)) via central differences of the closed form
    for (int i = 0; i < kTableSize; ++i) {
        const double t = i * dt;
        const double step = 0.5 * dt;
        const double tl = std::max(0.0, t - step), tr = std::min(1.0, t + step);
        pd_[i] = (stable::h_prime(alpha_(tr)) - stable::h_prime(alpha_(tl))) / (tr - tl);
    }
}

namespace {
inline double hermite(const std::vector<double>& val, const std::vector<double>& der,
                      double t) {
    const double x = std::clamp(t, 0.0, 1.0) * (kTableSize - 1);
    int i = static_cast<int>(x);
    if (i >= kTableSize - 1) i = kTableSize - 2;
    const double u = x - i;
    const double dt = 1.0 / (kTableSize - 1);
    const double v0 = val[i], v1 = val[i + 1];
    const double d0 = der[i] * dt, d1 = der[i + 1] * dt;
    const double u2 = u * u, u3 = u2 * u;
    return v0 * (2 * u3 - 3 * u2 + 1) + d0 * (u3 - 2 * u2 + u) + v1 * (-2 * u3 + 3 * u2) +
           d1 * (u3 - u2);
}
} // namespace

double AlphaTables::h_at(double t) const {
    return constant() ? h_const_ : hermite(hv_, hd_, t);
}

double AlphaTables::hp_at(double t) const {
    return constant() ? hp_const_ : hermite(pv_, pd_, t);
}

// ---- point evaluations ----

namespace {

// measure-based value at one time: sum over {V_i <= t} of
// sign_i * h(alpha(V_i)) * Gamma_i^(-1/alpha(V_i)), raw term order
double z_value_raw(const SeriesRealization& r, const AlphaTables& tab, double t,
                   std::vector<double>& q, std::vector<double>& scale) {
    const size_t n = r.n;
    q.resize(n);
    scale.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double av = tab.alpha_at(r.v[i]);
        q[i] = -1.0 / av;
        scale[i] = r.sign[i] * tab.h_at(r.v[i]);
    }
    return kernels::active().banded_scaled_exp_sum(r.log_gamma.data(), q.data(), scale.data(),
                                                   r.v.data(), n, -1.0, t);
}

void check_time(double t) {
    if (!(t >= 0.0) || !(t <= 1.0)) throw std::invalid_argument("time must lie in [0,1]");
}

} // namespace

double eval_Z(const SeriesRealization& r, const AlphaTables& tab, double t) {
    check_time(t);
    std::vector<double> q, scale;
    return z_value_raw(r, tab, t, q, scale);
}

double eval_X(const SeriesRealization& r, const AlphaTables& tab, double t) {
    check_time(t);
    if (tab.constant()) {
        // same expression tree as eval_Z: alpha(V_i) == alpha(t)
        std::vector<double> q, scale;
        return z_value_raw(r, tab, t, q, scale);
    }
    const double a = tab.alpha_at(t);
    const double s = kernels::active().masked_signed_exp_sum(
        r.log_gamma.data(), r.sign.data(), r.v.data(), r.n, -1.0 / a, t);
    return tab.h_at(t) * s;
}

double eval_levy_stable(const SeriesRealization& r, double alpha_const, double t) {
    const AlphaTables tab(AlphaFunction::constant(alpha_const));
    return eval_X(r, tab, t);
}

double eval_subordinator(const SeriesRealization& r, double alpha_const, double t) {
    if (!(alpha_const > 0.0) || !(alpha_const < 1.0))
        throw std::domain_error("subordinator index must lie in (0,1)");
    check_time(t);
    double s = 0.0;
    const double p = -1.0 / alpha_const;
    for (size_t i = 0; i < r.n; ++i)
        if (r.v[i] <= t) s += std::exp(p * r.log_gamma[i]);
    return s;
}

double jump_kernel(const SeriesRealization& r, const AlphaTables& tab, size_t i, double u) {
    if (i >= r.n) throw std::out_of_range("jump_kernel: term index exceeds N");
    const double a = tab.alpha_at(u);
    const double g = r.log_gamma[i];
    return tab.alpha().deriv(u) * std::exp(-g / a) *
           (tab.hp_at(u) + tab.h_at(u) * g / (a * a));
}

// ---- batched paths ----

namespace {

void require_views(const SeriesRealization& r) {
    if (r.v_sorted.size() != r.n)
        throw std::logic_error("realization was generated without sorted views");
}

void require_sorted_unit(const std::vector<double>& times) {
    for (size_t i = 0; i < times.size(); ++i) {
        check_time(times[i]);
        if (i > 0 && times[i] < times[i - 1])
            throw std::invalid_argument("times must be sorted");
    }
}

// jump sizes in V order, one term size function per tag
void jump_sizes_by_v(const SeriesRealization& r, const AlphaTables& tab, bool subordinator,
                     std::vector<double>& out) {
    const size_t n = r.n;
    std::vector<double> q(n), scale(n);
    for (size_t i = 0; i < n; ++i) {
        const double av = tab.alpha_at(r.v_sorted[i]);
        q[i] = -1.0 / av;
        scale[i] = subordinator ? 1.0 : r.sign_by_v[i] * tab.h_at(r.v_sorted[i]);
    }
    out.resize(n);
    kernels::active().scaled_exp(r.g_by_v.data(), q.data(), scale.data(), n, out.data());
}

PathSample merge_path(const SeriesRealization& r, const AlphaTables& tab,
                      std::vector<double> times, ProcessTag tag, bool subordinator) {
    const MergeCache cache(r, tab, subordinator);
    PathSample out;
    out.tag = tag;
    out.terms = r.n;
    out.seed = r.seed;
    out.values.resize(times.size());
    for (size_t k = 0; k < times.size(); ++k) out.values[k] = cache.value(times[k]);
    out.times = std::move(times);
    return out;
}

} // namespace

MergeCache::MergeCache(const SeriesRealization& r, const AlphaTables& tab, bool subordinator)
    : r_(&r) {
    require_views(r);
    std::vector<double> sizes;
    jump_sizes_by_v(r, tab, subordinator, sizes);
    cum_.resize(r.n + 1, 0.0);
    for (size_t i = 0; i < r.n; ++i) cum_[i + 1] = cum_[i] + sizes[i];
}

double MergeCache::value(double t) const {
    const size_t m =
        std::upper_bound(r_->v_sorted.begin(), r_->v_sorted.end(), t) - r_->v_sorted.begin();
    return cum_[m];
}

namespace {

PathSample field_path(const SeriesRealization& r, const AlphaTables& tab,
                      std::vector<double> times) {
    PathSample out;
    out.tag = ProcessTag::X;
    out.terms = r.n;
    out.seed = r.seed;
    out.values.resize(times.size());
    const auto& k = kernels::active();
    for (size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const size_t m =
            std::upper_bound(r.v_sorted.begin(), r.v_sorted.end(), t) - r.v_sorted.begin();
        const double a = tab.alpha_at(t);
        const double s = k.signed_exp_sum(r.g_by_v.data(), r.sign_by_v.data(), m, -1.0 / a);
        out.values[i] = tab.h_at(t) * s;
    }
    out.times = std::move(times);
    return out;
}

// integrand of Y between jump points: alpha'(u) [h'(a) A + h(a) B / a^2]
// with A = sum sign e^(-g/a), B = sum sign g e^(-g/a) over terms V_i < u
double y_integrand(const SeriesRealization& r, const AlphaTables& tab, size_t active,
                   double u) {
    const double a = tab.alpha_at(u);
    double A, B;
    kernels::active().signed_exp_sum2(r.g_by_v.data(), r.sign_by_v.data(), active, -1.0 / a,
                                      &A, &B);
    return tab.alpha().deriv(u) * (tab.hp_at(u) * A + tab.h_at(u) * B / (a * a));
}

PathSample correction_path(const SeriesRealization& r, const AlphaTables& tab,
                           std::vector<double> times, double quad_tol) {
    PathSample out;
    out.tag = ProcessTag::Y;
    out.terms = r.n;
    out.seed = r.seed;
    out.values.resize(times.size(), 0.0);
    if (tab.constant()) { // zero kernel
        out.times = std::move(times);
        return out;
    }
    const double t_max = times.empty() ? 0.0 : times.back();
    if (t_max == 0.0) {
        out.times = std::move(times);
        return out;
    }
    const double tol_rate = quad_tol / std::max(t_max, 1e-12); // tolerance per unit length

    double y = 0.0, prev = 0.0;
    size_t jump_idx = 0; // next V_sorted not yet passed
    for (size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        double seg_lo = prev;
        while (seg_lo < t) {
            // next breakpoint: the next jump location or t
            while (jump_idx < r.n && r.v_sorted[jump_idx] <= seg_lo) ++jump_idx;
            const double seg_hi =
                (jump_idx < r.n && r.v_sorted[jump_idx] < t) ? r.v_sorted[jump_idx] : t;
            const size_t active = jump_idx; // terms with V < u on (seg_lo, seg_hi)
            if (seg_hi > seg_lo) {
                const double tol = std::max(1e-15, tol_rate * (seg_hi - seg_lo));
                y += quad::integrate(
                         [&](double u) { return y_integrand(r, tab, active, u); }, seg_lo,
                         seg_hi, tol, 12)
                         .value;
            }
            if (seg_hi == seg_lo) break;
            seg_lo = seg_hi;
        }
        prev = t;
        out.values[k] = y;
    }
    out.times = std::move(times);
    return out;
}

} // namespace

double eval_Y(const SeriesRealization& r, const AlphaTables& tab, double t, double quad_tol) {
    check_time(t);
    return correction_path(r, tab, {t}, quad_tol).values[0];
}

PathSample sample_path(const SeriesRealization& r, const AlphaTables& tab,
                       std::vector<double> times, ProcessTag tag, double quad_tol) {
    require_views(r);
    require_sorted_unit(times);
    switch (tag) {
        case ProcessTag::L:
            if (!tab.constant())
                throw std::invalid_argument("the classical stable motion takes constant alpha");
            return merge_path(r, tab, std::move(times), ProcessTag::L, false);
        case ProcessTag::Z: return merge_path(r, tab, std::move(times), ProcessTag::Z, false);
        case ProcessTag::X:
            if (tab.constant()) {
                // collapse: identical path to Z on the shared realization
                PathSample p = merge_path(r, tab, std::move(times), ProcessTag::X, false);
                return p;
            }
            return field_path(r, tab, std::move(times));
        case ProcessTag::D: {
            const double a = tab.alpha_at(0.0);
            if (!tab.constant() || !(a > 0.0) || !(a < 1.0))
                throw std::domain_error("subordinator requires constant alpha in (0,1)");
            return merge_path(r, tab, std::move(times), ProcessTag::D, true);
        }
        case ProcessTag::Y: return correction_path(r, tab, std::move(times), quad_tol);
    }
    throw std::invalid_argument("unknown process tag");
}

// ---- truncation control ----

double tail_std_bound(const AlphaFunction& alpha, size_t n_terms) {
    const double a_lo = alpha.lower(), a_hi = alpha.upper();
    if (!(static_cast<double>(n_terms) > 2.0 / a_lo + 1.0))
        throw std::domain_error("tail bound requires N > 2/alpha_* + 1");

    std::vector<double> as;
    if (alpha.is_constant()) {
        as.push_back(a_lo);
    } else {
        const int grid = 64;
        for (int i = 0; i <= grid; ++i)
            as.push_back(a_lo + (a_hi - a_lo) * static_cast<double>(i) / grid);
    }
    std::vector<double> c2(as.size()), q(as.size());
    for (size_t j = 0; j < as.size(); ++j) {
        const double c = stable::c_alpha(as[j]);
        c2[j] = c * c;
        q[j] = 2.0 / as[j];
    }

    // window of exact terms, then an integral bound at the index that
    // maximizes the tail (largest alpha: slowest decay)
    const size_t window = 2000;
    const double n0 = static_cast<double>(n_terms);
    double sum = 0.0;
    for (size_t i = 1; i <= window; ++i) {
        const double idx = n0 + static_cast<double>(i);
        double best = 0.0;
        for (size_t j = 0; j < as.size(); ++j)
            best = std::max(best, c2[j] * std::exp(std::lgamma(idx - q[j]) - std::lgamma(idx)));
        sum += best;
    }
    const double m = n0 + static_cast<double>(window);
    size_t jh = 0;
    for (size_t j = 1; j < as.size(); ++j)
        if (as[j] > as[jh]) jh = j;
    const double qh = q[jh];
    // sum_{i>m} (i-q)^(-q) <= integral_{m-q}^inf x^(-q) dx, inflated by the
    // Stirling-ratio correction exp(q(q+1)/(2(m-q)))
    const double rem = c2[jh] * std::pow(m - qh, 1.0 - qh) / (qh - 1.0) *
                       std::exp(qh * (qh + 1.0) / (2.0 * (m - qh)));
    return std::sqrt(sum + rem);
}

TruncationPolicy TruncationPolicy::fixed(size_t n) {
    TruncationPolicy p;
    p.mode = Mode::FixedN;
    p.n = n;
    return p;
}

TruncationPolicy TruncationPolicy::tail_std(double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("tail-std target must be positive");
    TruncationPolicy p;
    p.mode = Mode::TailStd;
    p.epsilon = epsilon;
    return p;
}

size_t TruncationPolicy::resolve(const AlphaFunction& alpha) const {
    if (mode == Mode::FixedN) {
        if (n < 1) throw std::invalid_argument("fixed truncation needs N >= 1");
        return n;
    }
    size_t lo = static_cast<size_t>(2.0 / alpha.lower() + 2.0) + 4;
    if (tail_std_bound(alpha, lo) <= epsilon) return lo;
    size_t hi = lo;
    while (tail_std_bound(alpha, hi) > epsilon) {
        if (hi >= kMaxTerms)
            throw std::length_error("tail-std target needs more than 1e8 terms");
        hi = std::min(kMaxTerms, hi * 2);
    }
    while (hi - lo > 1) {
        const size_t mid = lo + (hi - lo) / 2;
        (tail_std_bound(alpha, mid) <= epsilon ? hi : lo) = mid;
    }
    return hi;
}

} // namespace mstab::series
