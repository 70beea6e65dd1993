#pragma once

// Monte Carlo experiment harness: dimension-recovery runs against the
// partition-formula predictions, empirical characteristic-function checks,
// moment-scaling slope checks, the pathwise decomposition identity, and the
// deterministic partition scan. Every runner is seed-deterministic and
// worker-count-independent; reports serialize to JSON plus CSV tables.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mstab/alpha.hpp"
#include "mstab/boxdim.hpp"
#include "mstab/series.hpp"
#include "mstab/sets.hpp"

namespace mstab::exp {

inline constexpr const char* kVersion = "0.1.0";

// fn(item_index, worker_slot); slots are in [0, workers)
void parallel_for(size_t n, int workers,
                  const std::function<void(size_t, size_t)>& fn);
int resolve_workers(int requested); // 0 -> MSTAB_WORKERS env or hw concurrency

struct SeedList {
    uint64_t base = 1;
    size_t count = 0;
    std::vector<uint64_t> explicit_seeds;
    std::vector<uint64_t> resolve() const;
    static SeedList from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// ---- dimension recovery ----

struct DimensionConfig {
    std::string name;
    AlphaFunction alpha = AlphaFunction::constant(0.7);
    BorelSet set = BorelSet::interval(0, 1);
    series::ProcessTag tag = series::ProcessTag::Z;
    int level = 12;
    series::TruncationPolicy truncation = series::TruncationPolicy::fixed(100000);
    SeedList seeds;
    int k_min = 3, k_max = 10;
    double tolerance = 0.1;
    std::optional<std::pair<double, double>> band; // pass band overriding +-tol
    std::vector<int> nseq = default_nseq();
};

struct SeedEstimate {
    uint64_t seed;
    double slope, r2, stderr_;
    size_t cloud_size;
};

struct DimensionReport {
    DimensionConfig cfg;
    std::vector<SeedEstimate> per_seed;
    double median = 0, q1 = 0, q3 = 0;
    double prediction = 0;
    bool predicted_converged = false;
    std::vector<std::string> warnings;
    bool pass = false;
    double elapsed_s = 0;
};

DimensionReport run_dimension_experiment(const DimensionConfig& cfg, int workers = 0);

// ---- empirical characteristic function ----

struct EcfConfig {
    std::string name;
    AlphaFunction alpha = AlphaFunction::constant(1.5);
    series::ProcessTag tag = series::ProcessTag::Z;
    double s = 0.0, t = 1.0;
    std::vector<double> thetas = {0.5, 1.0, 2.0, 4.0};
    series::TruncationPolicy truncation = series::TruncationPolicy::fixed(100000);
    SeedList seeds; // count is the Monte Carlo size M
};

struct EcfReport {
    EcfConfig cfg;
    std::vector<double> ecf, target, deviation;
    double max_deviation = 0, bound = 0;
    bool pass = false;
    double elapsed_s = 0;
};

EcfReport ecf_validation(const EcfConfig& cfg, int workers = 0);

// ---- negative-moment scaling (increments) ----

struct Lemma1Config {
    std::string name;
    AlphaFunction alpha = AlphaFunction::constant(1.5);
    double u_lo = 0.5, u_hi = 0.9;
    double beta = 0.5;
    std::vector<double> gaps; // |t-s| ladder, >= 2 decades
    series::TruncationPolicy truncation = series::TruncationPolicy::fixed(100000);
    SeedList seeds;
};

struct Lemma1Report {
    Lemma1Config cfg;
    std::vector<double> estimate, rel_stderr;
    size_t dropped = 0; // exact-zero increments skipped
    double slope = 0, reference_exponent = 0, pass_threshold = 0;
    bool unstable = false;
    bool pass = false;
    double elapsed_s = 0;
};

Lemma1Report lemma1_scaling(const Lemma1Config& cfg, int workers = 0);

// ---- sup-moment scaling over shrinking intervals ----

struct Lemma2Config {
    std::string name;
    AlphaFunction alpha = AlphaFunction::constant(0.7);
    series::ProcessTag tag = series::ProcessTag::Z;
    double p = 0.3;
    std::vector<std::pair<double, double>> intervals;
    int grid = 1024; // sup approximated on this many points per interval
    double epsilon = 0.05;
    series::TruncationPolicy truncation = series::TruncationPolicy::fixed(100000);
    SeedList seeds;
};

struct Lemma2Report {
    Lemma2Config cfg;
    std::vector<double> mean_sup_p, rel_stderr;
    double slope = 0, pass_threshold = 0;
    bool unstable = false;
    bool pass = false;
    double elapsed_s = 0;
};

Lemma2Report lemma2_scaling(const Lemma2Config& cfg, int workers = 0);

// ---- pathwise decomposition identity ----

struct IdentityConfig {
    std::string name;
    AlphaFunction alpha = AlphaFunction::affine(0.8, 0.6);
    int grid = 101;
    double quad_tol = 1e-6;
    double threshold = 1e-3;
    series::TruncationPolicy truncation = series::TruncationPolicy::fixed(10000);
    SeedList seeds;
};

struct IdentityReport {
    IdentityConfig cfg;
    std::vector<double> per_seed_residual;
    double max_residual = 0;
    bool pass = false;
    double elapsed_s = 0;
};

IdentityReport identity_check(const IdentityConfig& cfg, int workers = 0);

// ---- deterministic partition scan ----

struct ScanConfig {
    std::string name;
    AlphaFunction alpha = AlphaFunction::affine(1.0, 0.5);
    BorelSet set = BorelSet::interval(0, 1);
    std::vector<int> nseq = default_nseq();
    double agree_tol = 0.01;
};

struct ScanReport {
    ScanConfig cfg;
    Lemma3Scan scan;
    double max_disagreement = 0; // across the six variants at the largest n
    bool pass = false;
    double elapsed_s = 0;
};

ScanReport run_scan(const ScanConfig& cfg);

// ---- suite driver (the `experiment run` entry point) ----

nlohmann::json to_json(const DimensionReport&);
nlohmann::json to_json(const EcfReport&);
nlohmann::json to_json(const Lemma1Report&);
nlohmann::json to_json(const Lemma2Report&);
nlohmann::json to_json(const IdentityReport&);
nlohmann::json to_json(const ScanReport&);

struct SuiteResult {
    nlohmann::json report;
    bool all_pass = false;
};

// Runs every experiment in the config (see README for the schema), persists
// report.json and tables/*.csv under output_dir when it is nonempty.
SuiteResult run_suite(const nlohmann::json& config, const std::string& output_dir,
                      int workers = 0);

// report.json + tables/*.csv, all written atomically
void persist(const nlohmann::json& report, const std::string& output_dir);

// canonical serialization with volatile fields (timestamp) stripped
std::string canonical_report(const nlohmann::json& report);

} // namespace mstab::exp
