#include "mstab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mstab/io.hpp"
#include "mstab/kernels.hpp"
#include "mstab/stable.hpp"

namespace mstab::exp {

namespace {

using clock_t_ = std::chrono::steady_clock;

double seconds_since(clock_t_::time_point t0) {
    return std::chrono::duration<double>(clock_t_::now() - t0).count();
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    if (v.empty()) return 0.0;
    const double x = p * static_cast<double>(v.size() - 1);
    const size_t i = static_cast<size_t>(x);
    if (i + 1 >= v.size()) return v.back();
    const double w = x - static_cast<double>(i);
    return v[i] * (1.0 - w) + v[i + 1] * w;
}

struct Ols {
    double slope = 0, intercept = 0;
};

Ols ols(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    Ols o;
    o.slope = sxy / sxx;
    o.intercept = my - o.slope * mx;
    return o;
}

std::string iso_timestamp() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

} // namespace

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MSTAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(size_t n, int workers, const std::function<void(size_t, size_t)>& fn) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (workers == 1) {
        for (size_t i = 0; i < n; ++i) fn(i, 0);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                while (true) {
                    const size_t i = next.fetch_add(1);
                    if (i >= n) break;
                    fn(i, static_cast<size_t>(w));
                }
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::vector<uint64_t> SeedList::resolve() const {
    if (!explicit_seeds.empty()) return explicit_seeds;
    if (count == 0) throw std::invalid_argument("seed list must be nonempty");
    std::vector<uint64_t> out(count);
    for (size_t i = 0; i < count; ++i) out[i] = base + i;
    return out;
}

SeedList SeedList::from_json(const nlohmann::json& j) {
    SeedList s;
    if (j.is_array()) {
        for (const auto& v : j) s.explicit_seeds.push_back(v.get<uint64_t>());
        s.count = s.explicit_seeds.size();
        return s;
    }
    if (j.contains("list")) {
        for (const auto& v : j.at("list")) s.explicit_seeds.push_back(v.get<uint64_t>());
        s.count = s.explicit_seeds.size();
        return s;
    }
    s.base = j.at("base").get<uint64_t>();
    s.count = j.at("count").get<size_t>();
    return s;
}

nlohmann::json SeedList::to_json() const {
    if (!explicit_seeds.empty()) return nlohmann::json{{"list", explicit_seeds}};
    return nlohmann::json{{"base", base}, {"count", count}};
}

// ---- dimension recovery ----

DimensionReport run_dimension_experiment(const DimensionConfig& cfg, int workers) {
    const auto t0 = clock_t_::now();
    DimensionReport rep;
    rep.cfg = cfg;

    const auto pred = (cfg.tag == series::ProcessTag::X)
                          ? predict_dim_X(cfg.alpha, cfg.set, cfg.nseq)
                          : predict_dim_Z(cfg.alpha, cfg.set, cfg.nseq);
    rep.prediction = pred.dim;
    rep.predicted_converged = pred.converged;
    rep.warnings = pred.warnings;

    if (cfg.tag == series::ProcessTag::X) {
        // lower-bound hypothesis from the constant-free route: the spread of
        // alpha over the hull must stay under alpha_*^2/2
        const auto hull = cfg.set.convex_hull();
        const auto [alo, ahi] = cfg.alpha.range_on(hull.first, hull.second);
        if (ahi - alo > 0.5 * alo * alo)
            rep.warnings.push_back("alpha spread over c(E) exceeds alpha_*^2/2; the "
                                   "lower-bound hypotheses do not all hold");
    }

    const auto seeds = cfg.seeds.resolve();
    const size_t n_terms = cfg.truncation.resolve(cfg.alpha);
    const int w = resolve_workers(workers);
    const series::AlphaTables tables(cfg.alpha);

    std::vector<SeedEstimate> est(seeds.size());
    std::vector<std::string> errors(seeds.size());
    std::vector<series::SeriesRealization> scratch(static_cast<size_t>(std::max(1, w)));

    parallel_for(seeds.size(), w, [&](size_t i, size_t slot) {
        try {
            series::generate_into(seeds[i], n_terms, scratch[slot]);
            const auto cloud =
                dim::image(scratch[slot], tables, cfg.set, cfg.level, cfg.tag);
            const auto e = dim::estimate_dimension(cloud, cfg.k_min, cfg.k_max);
            est[i] = {seeds[i], e.slope, e.r2, e.slope_stderr, cloud.values.size()};
        } catch (const std::exception& ex) {
            errors[i] = ex.what();
        }
    });

    std::vector<double> slopes;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (!errors[i].empty()) {
            rep.warnings.push_back("seed " + std::to_string(seeds[i]) + ": " + errors[i]);
            continue;
        }
        rep.per_seed.push_back(est[i]);
        slopes.push_back(est[i].slope);
    }
    if (!slopes.empty()) {
        rep.median = quantile(slopes, 0.5);
        rep.q1 = quantile(slopes, 0.25);
        rep.q3 = quantile(slopes, 0.75);
    }
    const bool complete = slopes.size() == seeds.size();
    rep.pass = complete && (cfg.band ? (rep.median >= cfg.band->first &&
                                        rep.median <= cfg.band->second)
                                     : std::fabs(rep.median - rep.prediction) <= cfg.tolerance);
    rep.elapsed_s = seconds_since(t0);
    return rep;
}

// ---- ECF ----

EcfReport ecf_validation(const EcfConfig& cfg, int workers) {
    const auto t0 = clock_t_::now();
    if (!(cfg.s >= 0.0) || !(cfg.t <= 1.0) || !(cfg.s <= cfg.t))
        throw std::invalid_argument("ecf needs 0 <= s <= t <= 1");
    EcfReport rep;
    rep.cfg = cfg;

    const auto seeds = cfg.seeds.resolve();
    if (seeds.size() < 1000) throw std::invalid_argument("ecf needs at least 10^3 seeds");
    const size_t n_terms = cfg.truncation.resolve(cfg.alpha);
    const int w = resolve_workers(workers);
    const series::AlphaTables tables(cfg.alpha);
    const bool field = cfg.tag == series::ProcessTag::X;
    if (!field && cfg.tag != series::ProcessTag::Z)
        throw std::invalid_argument("ecf supports tags X and Z");

    struct Scratch {
        series::SeriesRealization r;
        std::vector<double> q, scale;
    };
    std::vector<Scratch> scratch(static_cast<size_t>(std::max(1, w)));
    std::vector<double> incr(seeds.size());

    const double a_t = cfg.alpha(cfg.t), a_s = cfg.alpha(cfg.s);
    const double h_t = stable::h(a_t), h_s = stable::h(a_s);

    parallel_for(seeds.size(), w, [&](size_t i, size_t slot) {
        auto& sc = scratch[slot];
        series::generate_into(seeds[i], n_terms, sc.r, /*sorted_views=*/false);
        const auto& k = kernels::active();
        if (field) {
            double val = h_t * k.masked_signed_exp_sum(sc.r.log_gamma.data(),
                                                       sc.r.sign.data(), sc.r.v.data(),
                                                       sc.r.n, -1.0 / a_t, cfg.t);
            if (cfg.s > 0.0)
                val -= h_s * k.masked_signed_exp_sum(sc.r.log_gamma.data(), sc.r.sign.data(),
                                                     sc.r.v.data(), sc.r.n, -1.0 / a_s, cfg.s);
            incr[i] = val;
        } else {
            sc.q.resize(sc.r.n);
            sc.scale.resize(sc.r.n);
            for (size_t j = 0; j < sc.r.n; ++j) {
                const double av = tables.alpha_at(sc.r.v[j]);
                sc.q[j] = -1.0 / av;
                sc.scale[j] = sc.r.sign[j] * tables.h_at(sc.r.v[j]);
            }
            incr[i] = k.banded_scaled_exp_sum(sc.r.log_gamma.data(), sc.q.data(),
                                              sc.scale.data(), sc.r.v.data(), sc.r.n,
                                              cfg.s > 0.0 ? cfg.s : -1.0, cfg.t);
        }
    });

    rep.bound = 3.0 / std::sqrt(static_cast<double>(seeds.size()));
    for (double theta : cfg.thetas) {
        double acc = 0.0;
        for (double d : incr) acc += std::cos(theta * d);
        const double ecf = acc / static_cast<double>(seeds.size());
        const stable::CharFnQuery q(cfg.s, cfg.t, theta);
        const double logphi = field ? stable::log_phi_X_increment(cfg.alpha, q)
                                    : stable::log_phi_Z_increment(cfg.alpha, q);
        const double target = std::exp(logphi);
        rep.ecf.push_back(ecf);
        rep.target.push_back(target);
        rep.deviation.push_back(std::fabs(ecf - target));
        rep.max_deviation = std::max(rep.max_deviation, rep.deviation.back());
    }
    rep.pass = rep.max_deviation <= rep.bound;
    rep.elapsed_s = seconds_since(t0);
    return rep;
}

// ---- lemma 1 scaling ----

Lemma1Report lemma1_scaling(const Lemma1Config& cfg, int workers) {
    const auto t0 = clock_t_::now();
    if (!(cfg.beta > 0.0) || !(cfg.beta < 1.0))
        throw std::invalid_argument("negative-moment order must lie in (0,1)");
    if (cfg.gaps.size() < 4) throw std::invalid_argument("need a ladder of at least 4 gaps");
    const double span = *std::max_element(cfg.gaps.begin(), cfg.gaps.end()) /
                        *std::min_element(cfg.gaps.begin(), cfg.gaps.end());
    if (span < 100.0) throw std::invalid_argument("gap ladder must span >= 2 decades");
    for (double g : cfg.gaps)
        if (!(g > 0.0) || cfg.u_lo + g > cfg.u_hi + 1e-12)
            throw std::invalid_argument("gaps must fit inside [u_lo, u_hi]");

    Lemma1Report rep;
    rep.cfg = cfg;
    const auto seeds = cfg.seeds.resolve();
    const size_t n_terms = cfg.truncation.resolve(cfg.alpha);
    const int w = resolve_workers(workers);
    const series::AlphaTables tables(cfg.alpha);

    const size_t G = cfg.gaps.size();
    struct Scratch {
        series::SeriesRealization r;
        std::vector<double> q, scale;
    };
    std::vector<Scratch> scratch(static_cast<size_t>(std::max(1, w)));
    // per-seed row of |dZ|^-beta per gap
    std::vector<double> rows(seeds.size() * G, 0.0);
    std::vector<uint8_t> zero_flag(seeds.size() * G, 0);

    parallel_for(seeds.size(), w, [&](size_t i, size_t slot) {
        auto& sc = scratch[slot];
        series::generate_into(seeds[i], n_terms, sc.r, /*sorted_views=*/false);
        sc.q.resize(sc.r.n);
        sc.scale.resize(sc.r.n);
        for (size_t j = 0; j < sc.r.n; ++j) {
            const double av = tables.alpha_at(sc.r.v[j]);
            sc.q[j] = -1.0 / av;
            sc.scale[j] = sc.r.sign[j] * tables.h_at(sc.r.v[j]);
        }
        const auto& k = kernels::active();
        for (size_t g = 0; g < G; ++g) {
            const double dz = k.banded_scaled_exp_sum(sc.r.log_gamma.data(), sc.q.data(),
                                                      sc.scale.data(), sc.r.v.data(), sc.r.n,
                                                      cfg.u_lo, cfg.u_lo + cfg.gaps[g]);
            if (dz == 0.0) zero_flag[i * G + g] = 1;
            else rows[i * G + g] = std::pow(std::fabs(dz), -cfg.beta);
        }
    });

    std::vector<double> lx, ly;
    for (size_t g = 0; g < G; ++g) {
        double sum = 0, sum2 = 0;
        size_t m = 0;
        for (size_t i = 0; i < seeds.size(); ++i) {
            if (zero_flag[i * G + g]) {
                ++rep.dropped;
                continue;
            }
            sum += rows[i * G + g];
            sum2 += rows[i * G + g] * rows[i * G + g];
            ++m;
        }
        const double mean = sum / static_cast<double>(m);
        const double var = std::max(0.0, sum2 / static_cast<double>(m) - mean * mean);
        const double rel = std::sqrt(var / static_cast<double>(m)) / mean;
        rep.estimate.push_back(mean);
        rep.rel_stderr.push_back(rel);
        if (rel > 0.2) rep.unstable = true;
        lx.push_back(std::log(cfg.gaps[g]));
        ly.push_back(std::log(mean));
    }
    rep.slope = ols(lx, ly).slope;
    const double a_lo_hull = cfg.alpha.range_on(cfg.u_lo, cfg.u_hi).first;
    rep.reference_exponent = -cfg.beta / a_lo_hull;
    rep.pass_threshold = rep.reference_exponent - 0.1;
    rep.pass = rep.slope >= rep.pass_threshold;
    rep.elapsed_s = seconds_since(t0);
    return rep;
}

// ---- lemma 2 scaling ----

Lemma2Report lemma2_scaling(const Lemma2Config& cfg, int workers) {
    const auto t0 = clock_t_::now();
    if (cfg.intervals.size() < 4)
        throw std::invalid_argument("need a ladder of at least 4 intervals");
    double a_sup = 0.0, a_inf = 2.0;
    for (auto& [a, b] : cfg.intervals) {
        if (!(a >= 0.0) || !(b <= 1.0) || !(a < b))
            throw std::invalid_argument("intervals must be nondegenerate within [0,1]");
        const auto r = cfg.alpha.range_on(a, b);
        a_inf = std::min(a_inf, r.first);
        a_sup = std::max(a_sup, r.second);
    }
    if (!(cfg.p > 0.0) || !(cfg.p < a_inf))
        throw std::invalid_argument("moment order must lie in (0, inf_j alpha_*(I_j))");

    Lemma2Report rep;
    rep.cfg = cfg;
    const auto seeds = cfg.seeds.resolve();
    const size_t n_terms = cfg.truncation.resolve(cfg.alpha);
    const int w = resolve_workers(workers);
    const series::AlphaTables tables(cfg.alpha);
    const bool field = cfg.tag == series::ProcessTag::X;
    const size_t J = cfg.intervals.size();

    std::vector<series::SeriesRealization> scratch(static_cast<size_t>(std::max(1, w)));
    std::vector<double> rows(seeds.size() * J, 0.0);

    parallel_for(seeds.size(), w, [&](size_t i, size_t slot) {
        auto& r = scratch[slot];
        series::generate_into(seeds[i], n_terms, r);
        if (!field) {
            const series::MergeCache cache(r, tables);
            for (size_t j = 0; j < J; ++j) {
                const auto [a, b] = cfg.intervals[j];
                double lo = cache.value(a), hi = lo;
                for (int g = 1; g < cfg.grid; ++g) {
                    const double t = a + (b - a) * static_cast<double>(g) / (cfg.grid - 1);
                    const double v = cache.value(t);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                rows[i * J + j] = std::pow(hi - lo, cfg.p);
            }
        } else {
            for (size_t j = 0; j < J; ++j) {
                const auto [a, b] = cfg.intervals[j];
                std::vector<double> grid(static_cast<size_t>(cfg.grid));
                for (int g = 0; g < cfg.grid; ++g)
                    grid[static_cast<size_t>(g)] =
                        a + (b - a) * static_cast<double>(g) / (cfg.grid - 1);
                const auto path = series::sample_path(r, tables, std::move(grid),
                                                      series::ProcessTag::X);
                const auto [mn, mx] =
                    std::minmax_element(path.values.begin(), path.values.end());
                rows[i * J + j] = std::pow(*mx - *mn, cfg.p);
            }
        }
    });

    std::vector<double> lx, ly;
    for (size_t j = 0; j < J; ++j) {
        double sum = 0, sum2 = 0;
        for (size_t i = 0; i < seeds.size(); ++i) {
            sum += rows[i * J + j];
            sum2 += rows[i * J + j] * rows[i * J + j];
        }
        const double m = static_cast<double>(seeds.size());
        const double mean = sum / m;
        const double var = std::max(0.0, sum2 / m - mean * mean);
        const double rel = std::sqrt(var / m) / mean;
        rep.mean_sup_p.push_back(mean);
        rep.rel_stderr.push_back(rel);
        if (rel > 0.2) rep.unstable = true;
        lx.push_back(std::log(cfg.intervals[j].second - cfg.intervals[j].first));
        ly.push_back(std::log(mean));
    }
    rep.slope = ols(lx, ly).slope;
    rep.pass_threshold = cfg.p / (std::max(1.0, a_sup) + cfg.epsilon) - 0.1;
    rep.pass = rep.slope >= rep.pass_threshold;
    rep.elapsed_s = seconds_since(t0);
    return rep;
}

// ---- decomposition identity ----

IdentityReport identity_check(const IdentityConfig& cfg, int workers) {
    const auto t0 = clock_t_::now();
    IdentityReport rep;
    rep.cfg = cfg;
    const auto seeds = cfg.seeds.resolve();
    const size_t n_terms = cfg.truncation.resolve(cfg.alpha);
    const int w = resolve_workers(workers);
    const series::AlphaTables tables(cfg.alpha);

    std::vector<double> grid(static_cast<size_t>(cfg.grid));
    for (int g = 0; g < cfg.grid; ++g)
        grid[static_cast<size_t>(g)] = static_cast<double>(g) / (cfg.grid - 1);

    std::vector<series::SeriesRealization> scratch(static_cast<size_t>(std::max(1, w)));
    rep.per_seed_residual.resize(seeds.size());

    parallel_for(seeds.size(), w, [&](size_t i, size_t slot) {
        auto& r = scratch[slot];
        series::generate_into(seeds[i], n_terms, r);
        const auto x = series::sample_path(r, tables, grid, series::ProcessTag::X);
        const auto z = series::sample_path(r, tables, grid, series::ProcessTag::Z);
        const auto y = series::sample_path(r, tables, grid, series::ProcessTag::Y, cfg.quad_tol);
        double worst = 0.0;
        for (size_t k = 0; k < grid.size(); ++k)
            worst = std::max(worst, std::fabs(x.values[k] - y.values[k] - z.values[k]));
        rep.per_seed_residual[i] = worst;
    });

    for (double rres : rep.per_seed_residual) rep.max_residual = std::max(rep.max_residual, rres);
    rep.pass = rep.max_residual < cfg.threshold;
    rep.elapsed_s = seconds_since(t0);
    return rep;
}

// ---- partition scan ----

ScanReport run_scan(const ScanConfig& cfg) {
    const auto t0 = clock_t_::now();
    ScanReport rep;
    rep.cfg = cfg;
    rep.scan = lemma3_scan(cfg.alpha, cfg.set, cfg.nseq);
    double lo = rep.scan.variants[0].limit, hi = lo;
    for (const auto& v : rep.scan.variants) {
        lo = std::min(lo, v.limit);
        hi = std::max(hi, v.limit);
    }
    rep.max_disagreement = hi - lo;
    rep.pass = rep.max_disagreement <= cfg.agree_tol && rep.scan.spread_within_bound;
    rep.elapsed_s = seconds_since(t0);
    return rep;
}

// ---- JSON serialization ----

namespace {

nlohmann::json trunc_json(const series::TruncationPolicy& p) {
    if (p.mode == series::TruncationPolicy::Mode::FixedN)
        return {{"mode", "fixed"}, {"n", p.n}};
    return {{"mode", "tail_std"}, {"epsilon", p.epsilon}};
}

series::TruncationPolicy trunc_from_json(const nlohmann::json& j) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "fixed") return series::TruncationPolicy::fixed(j.at("n").get<size_t>());
    if (mode == "tail_std")
        return series::TruncationPolicy::tail_std(j.at("epsilon").get<double>());
    throw std::invalid_argument("unknown truncation mode '" + mode + "'");
}

nlohmann::json report_json(const DimReport& r) {
    return {{"variant", r.variant}, {"nseq", r.nseq},         {"values", r.values},
            {"limit", r.limit},     {"converged", r.converged}};
}

} // namespace

nlohmann::json to_json(const DimensionReport& r) {
    nlohmann::json per_seed = nlohmann::json::array();
    for (const auto& e : r.per_seed)
        per_seed.push_back({{"seed", e.seed},
                            {"slope", e.slope},
                            {"r2", e.r2},
                            {"slope_stderr", e.stderr_},
                            {"cloud_size", e.cloud_size}});
    return {{"type", "dimension"},
            {"name", r.cfg.name},
            {"config",
             {{"alpha", r.cfg.alpha.to_json()},
              {"set", r.cfg.set.to_json()},
              {"tag", std::string(1, static_cast<char>(r.cfg.tag))},
              {"level", r.cfg.level},
              {"truncation", trunc_json(r.cfg.truncation)},
              {"seeds", r.cfg.seeds.to_json()},
              {"ladder", {{"k_min", r.cfg.k_min}, {"k_max", r.cfg.k_max}}},
              {"tolerance", r.cfg.tolerance}}},
            {"per_seed", per_seed},
            {"median", r.median},
            {"iqr", {r.q1, r.q3}},
            {"prediction", r.prediction},
            {"prediction_converged", r.predicted_converged},
            {"warnings", r.warnings},
            {"pass", r.pass},
            {"elapsed_s", r.elapsed_s}};
}

nlohmann::json to_json(const EcfReport& r) {
    return {{"type", "ecf"},
            {"name", r.cfg.name},
            {"config",
             {{"alpha", r.cfg.alpha.to_json()},
              {"tag", std::string(1, static_cast<char>(r.cfg.tag))},
              {"s", r.cfg.s},
              {"t", r.cfg.t},
              {"theta", r.cfg.thetas},
              {"truncation", trunc_json(r.cfg.truncation)},
              {"seeds", r.cfg.seeds.to_json()}}},
            {"ecf", r.ecf},
            {"target", r.target},
            {"deviation", r.deviation},
            {"max_deviation", r.max_deviation},
            {"bound", r.bound},
            {"pass", r.pass},
            {"elapsed_s", r.elapsed_s}};
}

nlohmann::json to_json(const Lemma1Report& r) {
    return {{"type", "lemma1"},
            {"name", r.cfg.name},
            {"config",
             {{"alpha", r.cfg.alpha.to_json()},
              {"u", {r.cfg.u_lo, r.cfg.u_hi}},
              {"beta", r.cfg.beta},
              {"gaps", r.cfg.gaps},
              {"truncation", trunc_json(r.cfg.truncation)},
              {"seeds", r.cfg.seeds.to_json()}}},
            {"estimate", r.estimate},
            {"rel_stderr", r.rel_stderr},
            {"dropped", r.dropped},
            {"slope", r.slope},
            {"reference_exponent", r.reference_exponent},
            {"pass_threshold", r.pass_threshold},
            {"unstable", r.unstable},
            {"pass", r.pass},
            {"elapsed_s", r.elapsed_s}};
}

nlohmann::json to_json(const Lemma2Report& r) {
    nlohmann::json ivs = nlohmann::json::array();
    for (auto& [a, b] : r.cfg.intervals) ivs.push_back({a, b});
    return {{"type", "lemma2"},
            {"name", r.cfg.name},
            {"config",
             {{"alpha", r.cfg.alpha.to_json()},
              {"tag", std::string(1, static_cast<char>(r.cfg.tag))},
              {"p", r.cfg.p},
              {"intervals", ivs},
              {"grid", r.cfg.grid},
              {"epsilon", r.cfg.epsilon},
              {"truncation", trunc_json(r.cfg.truncation)},
              {"seeds", r.cfg.seeds.to_json()}}},
            {"mean_sup_p", r.mean_sup_p},
            {"rel_stderr", r.rel_stderr},
            {"slope", r.slope},
            {"pass_threshold", r.pass_threshold},
            {"unstable", r.unstable},
            {"pass", r.pass},
            {"elapsed_s", r.elapsed_s}};
}

nlohmann::json to_json(const IdentityReport& r) {
    return {{"type", "identity"},
            {"name", r.cfg.name},
            {"config",
             {{"alpha", r.cfg.alpha.to_json()},
              {"grid", r.cfg.grid},
              {"quad_tol", r.cfg.quad_tol},
              {"threshold", r.cfg.threshold},
              {"truncation", trunc_json(r.cfg.truncation)},
              {"seeds", r.cfg.seeds.to_json()}}},
            {"per_seed_residual", r.per_seed_residual},
            {"max_residual", r.max_residual},
            {"pass", r.pass},
            {"elapsed_s", r.elapsed_s}};
}

nlohmann::json to_json(const ScanReport& r) {
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : r.scan.variants) variants.push_back(report_json(v));
    return {{"type", "scan"},
            {"name", r.cfg.name},
            {"config",
             {{"alpha", r.cfg.alpha.to_json()},
              {"set", r.cfg.set.to_json()},
              {"nseq", r.cfg.nseq},
              {"agree_tol", r.cfg.agree_tol}}},
            {"variants", variants},
            {"spread_d", r.scan.spread_d},
            {"spread_bound", r.scan.spread_bound},
            {"spread_within_bound", r.scan.spread_within_bound},
            {"max_disagreement", r.max_disagreement},
            {"pass", r.pass},
            {"elapsed_s", r.elapsed_s}};
}

// ---- suite ----

namespace {

series::ProcessTag tag_from_json(const nlohmann::json& j) {
    const std::string s = j.get<std::string>();
    if (s.size() != 1) throw std::invalid_argument("tag must be one of L,X,Z,Y,D");
    return series::tag_from_char(s[0]);
}

nlohmann::json run_one(const nlohmann::json& e, int workers) {
    const std::string type = e.at("type").get<std::string>();
    if (type == "dimension") {
        DimensionConfig cfg;
        cfg.name = e.at("name").get<std::string>();
        cfg.alpha = AlphaFunction::from_json(e.at("alpha"));
        cfg.set = BorelSet::from_json(e.at("set"));
        cfg.tag = tag_from_json(e.at("tag"));
        cfg.level = e.at("level").get<int>();
        cfg.truncation = trunc_from_json(e.at("truncation"));
        cfg.seeds = SeedList::from_json(e.at("seeds"));
        if (e.contains("ladder")) {
            cfg.k_min = e.at("ladder").at("k_min").get<int>();
            cfg.k_max = e.at("ladder").at("k_max").get<int>();
        }
        if (e.contains("tolerance")) cfg.tolerance = e.at("tolerance").get<double>();
        if (e.contains("band"))
            cfg.band = {e.at("band").at(0).get<double>(), e.at("band").at(1).get<double>()};
        if (e.contains("nseq")) cfg.nseq = e.at("nseq").get<std::vector<int>>();
        return to_json(run_dimension_experiment(cfg, workers));
    }
    if (type == "ecf") {
        EcfConfig cfg;
        cfg.name = e.at("name").get<std::string>();
        cfg.alpha = AlphaFunction::from_json(e.at("alpha"));
        cfg.tag = tag_from_json(e.at("tag"));
        cfg.s = e.at("s").get<double>();
        cfg.t = e.at("t").get<double>();
        cfg.thetas = e.at("theta").get<std::vector<double>>();
        cfg.truncation = trunc_from_json(e.at("truncation"));
        cfg.seeds = SeedList::from_json(e.at("seeds"));
        return to_json(ecf_validation(cfg, workers));
    }
    if (type == "lemma1") {
        Lemma1Config cfg;
        cfg.name = e.at("name").get<std::string>();
        cfg.alpha = AlphaFunction::from_json(e.at("alpha"));
        cfg.u_lo = e.at("u").at(0).get<double>();
        cfg.u_hi = e.at("u").at(1).get<double>();
        cfg.beta = e.at("beta").get<double>();
        cfg.gaps = e.at("gaps").get<std::vector<double>>();
        cfg.truncation = trunc_from_json(e.at("truncation"));
        cfg.seeds = SeedList::from_json(e.at("seeds"));
        return to_json(lemma1_scaling(cfg, workers));
    }
    if (type == "lemma2") {
        Lemma2Config cfg;
        cfg.name = e.at("name").get<std::string>();
        cfg.alpha = AlphaFunction::from_json(e.at("alpha"));
        cfg.tag = tag_from_json(e.at("tag"));
        cfg.p = e.at("p").get<double>();
        for (const auto& iv : e.at("intervals"))
            cfg.intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
        if (e.contains("grid")) cfg.grid = e.at("grid").get<int>();
        if (e.contains("epsilon")) cfg.epsilon = e.at("epsilon").get<double>();
        cfg.truncation = trunc_from_json(e.at("truncation"));
        cfg.seeds = SeedList::from_json(e.at("seeds"));
        return to_json(lemma2_scaling(cfg, workers));
    }
    if (type == "identity") {
        IdentityConfig cfg;
        cfg.name = e.at("name").get<std::string>();
        cfg.alpha = AlphaFunction::from_json(e.at("alpha"));
        if (e.contains("grid")) cfg.grid = e.at("grid").get<int>();
        if (e.contains("quad_tol")) cfg.quad_tol = e.at("quad_tol").get<double>();
        if (e.contains("threshold")) cfg.threshold = e.at("threshold").get<double>();
        cfg.truncation = trunc_from_json(e.at("truncation"));
        cfg.seeds = SeedList::from_json(e.at("seeds"));
        return to_json(identity_check(cfg, workers));
    }
    if (type == "scan") {
        ScanConfig cfg;
        cfg.name = e.at("name").get<std::string>();
        cfg.alpha = AlphaFunction::from_json(e.at("alpha"));
        cfg.set = BorelSet::from_json(e.at("set"));
        if (e.contains("nseq")) cfg.nseq = e.at("nseq").get<std::vector<int>>();
        if (e.contains("agree_tol")) cfg.agree_tol = e.at("agree_tol").get<double>();
        return to_json(run_scan(cfg));
    }
    throw std::invalid_argument("unknown experiment type '" + type + "'");
}

std::string csv_for(const nlohmann::json& e) {
    std::ostringstream out;
    out.precision(17);
    const std::string type = e.at("type").get<std::string>();
    if (type == "dimension") {
        out << "seed,slope,r2,slope_stderr,cloud_size\n";
        for (const auto& row : e.at("per_seed"))
            out << row.at("seed").get<uint64_t>() << "," << row.at("slope").get<double>() << ","
                << row.at("r2").get<double>() << "," << row.at("slope_stderr").get<double>()
                << "," << row.at("cloud_size").get<size_t>() << "\n";
    } else if (type == "ecf") {
        out << "theta,ecf,target,deviation\n";
        const auto& c = e.at("config").at("theta");
        for (size_t i = 0; i < c.size(); ++i)
            out << c.at(i).get<double>() << "," << e.at("ecf").at(i).get<double>() << ","
                << e.at("target").at(i).get<double>() << ","
                << e.at("deviation").at(i).get<double>() << "\n";
    } else if (type == "lemma1") {
        out << "gap,estimate,rel_stderr\n";
        const auto& g = e.at("config").at("gaps");
        for (size_t i = 0; i < g.size(); ++i)
            out << g.at(i).get<double>() << "," << e.at("estimate").at(i).get<double>() << ","
                << e.at("rel_stderr").at(i).get<double>() << "\n";
    } else if (type == "lemma2") {
        out << "length,mean_sup_p,rel_stderr\n";
        const auto& iv = e.at("config").at("intervals");
        for (size_t i = 0; i < iv.size(); ++i)
            out << (iv.at(i).at(1).get<double>() - iv.at(i).at(0).get<double>()) << ","
                << e.at("mean_sup_p").at(i).get<double>() << ","
                << e.at("rel_stderr").at(i).get<double>() << "\n";
    } else if (type == "identity") {
        out << "residual\n";
        for (const auto& r : e.at("per_seed_residual")) out << r.get<double>() << "\n";
    } else if (type == "scan") {
        out << "n";
        for (const auto& v : e.at("variants")) out << "," << v.at("variant").get<std::string>();
        out << ",spread_d,spread_bound\n";
        const auto& nseq = e.at("config").at("nseq");
        for (size_t i = 0; i < nseq.size(); ++i) {
            out << nseq.at(i).get<int>();
            for (const auto& v : e.at("variants")) out << "," << v.at("values").at(i).get<double>();
            out << "," << e.at("spread_d").at(i).get<double>() << ","
                << e.at("spread_bound").at(i).get<double>() << "\n";
        }
    }
    return out.str();
}

} // namespace

std::string canonical_report(const nlohmann::json& report) {
    nlohmann::json copy = report;
    copy.erase("generated_at");
    return copy.dump(2) + "\n";
}

void persist(const nlohmann::json& report, const std::string& output_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(output_dir) / "tables", ec);
    if (ec)
        throw std::runtime_error("cannot create output directory '" + output_dir +
                                 "': " + ec.message());
    io::atomic_write((fs::path(output_dir) / "report.json").string(), report.dump(2) + "\n");
    for (const auto& e : report.at("experiments")) {
        const std::string csv = csv_for(e);
        if (csv.empty()) continue;
        const std::string name = e.at("name").get<std::string>();
        io::atomic_write((fs::path(output_dir) / "tables" / (name + ".csv")).string(), csv);
    }
}

SuiteResult run_suite(const nlohmann::json& config, const std::string& output_dir,
                      int workers) {
    if (workers <= 0 && config.contains("workers"))
        workers = config.at("workers").get<int>();
    nlohmann::json experiments = nlohmann::json::array();
    bool all_pass = true;
    for (const auto& e : config.at("experiments")) {
        nlohmann::json r;
        try {
            r = run_one(e, workers);
        } catch (const std::exception& ex) {
            r = {{"type", e.value("type", "?")},
                 {"name", e.value("name", "?")},
                 {"error", ex.what()},
                 {"pass", false}};
        }
        all_pass = all_pass && r.at("pass").get<bool>();
        experiments.push_back(std::move(r));
        // partial persistence so a late failure keeps earlier results
        if (!output_dir.empty()) {
            nlohmann::json partial = {{"schema", "mstab-report-v1"},
                                      {"generated_at", iso_timestamp()},
                                      {"environment",
                                       {{"version", kVersion},
                                        {"kernel", kernels::active().name}}},
                                      {"experiments", experiments},
                                      {"all_pass", all_pass}};
            persist(partial, output_dir);
        }
    }
    SuiteResult out;
    out.report = {{"schema", "mstab-report-v1"},
                  {"generated_at", iso_timestamp()},
                  {"environment",
                   {{"version", kVersion}, {"kernel", kernels::active().name}}},
                  {"experiments", experiments},
                  {"all_pass", all_pass}};
    out.all_pass = all_pass;
    if (!output_dir.empty()) persist(out.report, output_dir);
    return out;
}

} // namespace mstab::exp
