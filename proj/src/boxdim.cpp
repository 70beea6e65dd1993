#include "mstab/boxdim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mstab::dim {

PointCloud make_cloud(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("point cloud must be nonempty");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("point cloud rejects non-finite values");
    PointCloud c;
    c.values = std::move(values);
    return c;
}

PointCloud image(const series::SeriesRealization& r, const series::AlphaTables& tab,
                 const BorelSet& e, int level, series::ProcessTag tag) {
    auto pts = e.approximate(level);
    if (pts.empty()) throw std::invalid_argument("image of an empty approximation");
    auto path = series::sample_path(r, tab, std::move(pts), tag);
    PointCloud c = make_cloud(std::move(path.values));
    c.tag = static_cast<char>(tag);
    c.seed = r.seed;
    c.terms = r.n;
    c.set_spec = e.to_spec();
    c.level = level;
    return c;
}

namespace {

double diameter(const PointCloud& c) {
    const auto [mn, mx] = std::minmax_element(c.values.begin(), c.values.end());
    return *mx - *mn;
}

double min_spacing(std::vector<double> sorted) {
    std::sort(sorted.begin(), sorted.end());
    double sp = 0.0;
    for (size_t i = 1; i < sorted.size(); ++i) {
        const double g = sorted[i] - sorted[i - 1];
        if (g > 0.0 && (sp == 0.0 || g < sp)) sp = g;
    }
    return sp;
}

} // namespace

std::vector<double> geometric_scales(double diam, int k_min, int k_max) {
    if (!(diam > 0.0)) throw std::invalid_argument("scale ladder needs a positive diameter");
    if (k_min > k_max) throw std::invalid_argument("scale ladder needs k_min <= k_max");
    std::vector<double> s;
    for (int k = k_min; k <= k_max; ++k) s.push_back(diam * std::ldexp(1.0, -k));
    return s;
}

std::vector<double> default_scales(const PointCloud& c, int k_min) {
    const double diam = diameter(c);
    if (!(diam > 0.0)) throw std::domain_error("degenerate cloud: zero diameter");
    const double sp = min_spacing(c.values);
    int k_max = k_min;
    if (sp > 0.0)
        k_max = std::max(k_min, static_cast<int>(std::floor(std::log2(diam / (4.0 * sp)))));
    k_max = std::min(k_max, 48);
    return geometric_scales(diam, k_min, k_max);
}

std::vector<size_t> box_count(const PointCloud& c, const std::vector<double>& scales) {
    for (size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0)) throw std::invalid_argument("scales must be positive");
        if (i > 0 && scales[i] >= scales[i - 1])
            throw std::invalid_argument("scales must be sorted descending");
    }
    std::vector<double> sorted = c.values;
    std::sort(sorted.begin(), sorted.end());
    const double origin = sorted.front();
    std::vector<size_t> counts;
    counts.reserve(scales.size());
    for (double delta : scales) {
        size_t n = 0;
        long long prev = -1;
        bool first = true;
        for (double v : sorted) {
            const long long idx = static_cast<long long>(std::floor((v - origin) / delta));
            if (first || idx != prev) ++n;
            prev = idx;
            first = false;
        }
        counts.push_back(n);
    }
    return counts;
}

DimEstimate fit_dim(const std::vector<double>& scales, const std::vector<size_t>& counts,
                    size_t fit_lo, size_t fit_hi) {
    if (scales.size() != counts.size()) throw std::invalid_argument("scales/counts mismatch");
    if (fit_hi >= scales.size() || fit_lo > fit_hi)
        throw std::invalid_argument("bad fit range");
    const size_t m = fit_hi - fit_lo + 1;
    if (m < 4) throw std::invalid_argument("need at least 4 scales inside the fit range");

    bool all_equal = true;
    for (size_t i = fit_lo + 1; i <= fit_hi; ++i)
        if (counts[i] != counts[fit_lo]) all_equal = false;
    if (all_equal) throw std::domain_error("degenerate fit: constant box counts");

    double sx = 0, sy = 0;
    for (size_t i = fit_lo; i <= fit_hi; ++i) {
        sx += std::log(1.0 / scales[i]);
        sy += std::log(static_cast<double>(counts[i]));
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = fit_lo; i <= fit_hi; ++i) {
        const double dx = std::log(1.0 / scales[i]) - mx;
        const double dy = std::log(static_cast<double>(counts[i])) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    DimEstimate e;
    e.scales = scales;
    e.counts = counts;
    e.fit_lo = fit_lo;
    e.fit_hi = fit_hi;
    e.slope = sxy / sxx;
    e.intercept = my - e.slope * mx;
    e.r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
    const double resid = std::max(0.0, syy - e.slope * sxy);
    e.slope_stderr = (m > 2) ? std::sqrt(resid / static_cast<double>(m - 2) / sxx) : 0.0;
    return e;
}

DimEstimate estimate_dimension(const PointCloud& c, int k_min, int k_max) {
    const double diam = diameter(c);
    if (!(diam > 0.0)) throw std::domain_error("degenerate cloud: zero diameter");
    const double sp = min_spacing(c.values);
    auto scales = geometric_scales(diam, std::max(3, k_min), std::min(k_max, 48));
    const auto counts = box_count(c, scales);
    // default range: 4*minspacing <= delta <= diam/8
    size_t lo = 0, hi = scales.size() - 1;
    while (lo < scales.size() && scales[lo] > diam / 8.0 * (1.0 + 1e-12)) ++lo;
    while (hi > lo && sp > 0.0 && scales[hi] < 4.0 * sp) --hi;
    return fit_dim(scales, counts, lo, hi);
}

} // namespace mstab::dim
