#pragma once

// Box-counting dimension estimation for one-dimensional point clouds
// (process images): geometric scale ladders, exact occupancy counts and a
// log-log least-squares slope with fit diagnostics.

#include <cstdint>
#include <string>
#include <vector>

#include "mstab/series.hpp"
#include "mstab/sets.hpp"

namespace mstab::dim {

struct PointCloud {
    std::vector<double> values; // finite, nonempty
    // provenance
    char tag = '?';
    uint64_t seed = 0;
    size_t terms = 0;
    std::string set_spec;
    int level = 0;
};

PointCloud make_cloud(std::vector<double> values);

// Image of the set under the tagged process: evaluate at approximate(e, L).
PointCloud image(const series::SeriesRealization& r, const series::AlphaTables& tab,
                 const BorelSet& e, int level, series::ProcessTag tag);

// diam * 2^(-k) for k in [k_min, k_max], descending.
std::vector<double> geometric_scales(double diameter, int k_min, int k_max);

// Ladder per the default rule: k from 3 until the scale falls below 4x the
// minimal positive spacing of the cloud.
std::vector<double> default_scales(const PointCloud& c, int k_min = 3);

// Number of distinct occupied boxes floor((v - min)/delta) per scale.
std::vector<size_t> box_count(const PointCloud& c, const std::vector<double>& scales);

struct DimEstimate {
    std::vector<double> scales;
    std::vector<size_t> counts;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
    size_t fit_lo = 0, fit_hi = 0; // index range used (inclusive)
};

// OLS of log N(delta) against log(1/delta) over [fit_lo, fit_hi]; throws
// std::domain_error when all counts are equal (degenerate fit) and
// std::invalid_argument when fewer than 4 scales are in range.
DimEstimate fit_dim(const std::vector<double>& scales, const std::vector<size_t>& counts,
                    size_t fit_lo, size_t fit_hi);

// Pipeline with the default fit range: scales within [4*minspacing, diam/8].
DimEstimate estimate_dimension(const PointCloud& c, int k_min = 3, int k_max = 40);

} // namespace mstab::dim
