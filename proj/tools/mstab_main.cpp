// mstab: simulate multistable Levy motions, evaluate predicted image
// dimensions, estimate box-counting dimensions, and run experiment suites.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mstab/boxdim.hpp"
#include "mstab/experiments.hpp"
#include "mstab/io.hpp"
#include "mstab/kernels.hpp"
#include "mstab/series.hpp"
#include "mstab/sets.hpp"
#include "mstab/stable.hpp"

namespace {

constexpr const char* kAlphaHelp =
    "alpha spec: const:c | affine:a,b | cubic:t0,a0;t1,a1;... (alpha(t)=a+b*t for affine)";
constexpr const char* kSetHelp =
    "set spec: interval:a,b | point:a | cantor:a,b,lambda | union:[spec;spec;...]";

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    for (double d : parse_doubles(s)) out.push_back(static_cast<int>(d));
    return out;
}

nlohmann::json report_to_json(const mstab::DimReport& r) {
    return {{"variant", r.variant}, {"nseq", r.nseq},         {"values", r.values},
            {"limit", r.limit},     {"converged", r.converged}};
}

int cmd_simulate(const std::string& alpha_spec, char process, uint64_t seed, size_t terms,
                 int grid, const std::string& out_path, const std::string& format,
                 double quad_tol) {
    const auto alpha = mstab::AlphaFunction::parse(alpha_spec);
    const auto tag = mstab::series::tag_from_char(process);
    std::vector<double> times;
    if (grid < 1) throw std::invalid_argument("--grid must be >= 1");
    if (grid == 1) times.push_back(0.0);
    else
        for (int i = 0; i < grid; ++i)
            times.push_back(static_cast<double>(i) / (grid - 1));
    const auto r = mstab::series::generate(seed, terms);
    const mstab::series::AlphaTables tables(alpha);
    const auto path = mstab::series::sample_path(r, tables, std::move(times), tag, quad_tol);
    if (format == "bin") mstab::io::write_path_binary(path, out_path);
    else mstab::io::write_path_csv(path, out_path);
    std::cout << out_path << "\n";
    return 0;
}

int cmd_predict(const std::string& alpha_spec, const std::string& set_spec, char target,
                const std::vector<int>& nseq) {
    const auto alpha = mstab::AlphaFunction::parse(alpha_spec);
    const auto set = mstab::BorelSet::parse(set_spec);
    const auto pred = (target == 'X') ? mstab::predict_dim_X(alpha, set, nseq)
                                      : mstab::predict_dim_Z(alpha, set, nseq);
    nlohmann::json j = {{"dim", pred.dim},
                        {"target", std::string(1, target)},
                        {"converged", pred.converged},
                        {"warnings", pred.warnings},
                        {"primary", report_to_json(pred.primary)}};
    if (pred.secondary) j["secondary"] = report_to_json(*pred.secondary);
    std::cout << j.dump(2) << "\n";
    return pred.converged ? 0 : 2;
}

int cmd_partition_scan(const std::string& alpha_spec, const std::string& set_spec,
                       const std::vector<int>& nseq) {
    const auto alpha = mstab::AlphaFunction::parse(alpha_spec);
    const auto set = mstab::BorelSet::parse(set_spec);
    const auto scan = mstab::lemma3_scan(alpha, set, nseq);
    nlohmann::json variants = nlohmann::json::array();
    bool converged = true;
    for (const auto& v : scan.variants) {
        variants.push_back(report_to_json(v));
        converged = converged && v.converged;
    }
    nlohmann::json j = {{"variants", variants},
                        {"spread_d", scan.spread_d},
                        {"spread_bound", scan.spread_bound},
                        {"spread_within_bound", scan.spread_within_bound},
                        {"lipschitz_bound", alpha.lipschitz()}};
    std::cout << j.dump(2) << "\n";
    return converged ? 0 : 2;
}

int cmd_dim(const std::string& in_path, int k_min, int k_max) {
    auto values = mstab::io::read_value_column(in_path);
    const auto cloud = mstab::dim::make_cloud(std::move(values));
    const auto est = mstab::dim::estimate_dimension(cloud, k_min, k_max);
    nlohmann::json j = {{"slope", est.slope},
                        {"intercept", est.intercept},
                        {"r2", est.r2},
                        {"slope_stderr", est.slope_stderr},
                        {"scales", est.scales},
                        {"counts", est.counts},
                        {"fit_range", {est.fit_lo, est.fit_hi}}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_cf_check(const std::string& alpha_spec, char tag, double s, double t,
                 const std::vector<double>& thetas, size_t seeds, uint64_t seed_base,
                 size_t terms, int workers) {
    mstab::exp::EcfConfig cfg;
    cfg.name = "cf-check";
    cfg.alpha = mstab::AlphaFunction::parse(alpha_spec);
    cfg.tag = mstab::series::tag_from_char(tag);
    cfg.s = s;
    cfg.t = t;
    cfg.thetas = thetas;
    cfg.truncation = mstab::series::TruncationPolicy::fixed(terms);
    cfg.seeds.base = seed_base;
    cfg.seeds.count = seeds;
    const auto rep = mstab::exp::ecf_validation(cfg, workers);
    std::cout << mstab::exp::to_json(rep).dump(2) << "\n";
    return rep.pass ? 0 : 1;
}

int cmd_experiment_run(const std::string& config_path, std::string out_dir, int workers) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
    nlohmann::json config;
    in >> config;
    if (out_dir.empty()) out_dir = config.value("output_dir", std::string("mstab-out"));
    const auto result = mstab::exp::run_suite(config, out_dir, workers);
    for (const auto& e : result.report.at("experiments")) {
        const bool pass = e.at("pass").get<bool>();
        std::cout << (pass ? "PASS  " : "FAIL  ") << e.at("name").get<std::string>();
        if (e.contains("error")) std::cout << "  (" << e.at("error").get<std::string>() << ")";
        std::cout << "\n";
    }
    std::cout << (result.all_pass ? "all checks passed" : "some checks failed") << "\n";
    std::cout << "report: " << out_dir << "/report.json\n";
    return result.all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multistable Levy motion laboratory"};
    app.require_subcommand(1);

    std::string alpha_spec, set_spec, out_path, in_path, config_path, format = "csv";
    std::string process = "Z", target = "Z", nseq_str, theta_str = "0.5,1,2,4";
    std::string kernel_mode;
    uint64_t seed = 0, seed_base = 1;
    size_t terms = 10000, mc_seeds = 10000;
    int grid = 101, k_min = 3, k_max = 40, workers = 0;
    double s = 0.0, t = 1.0, quad_tol = 1e-6;

    app.add_option("--kernel", kernel_mode, "force kernel variant: auto|scalar|avx2");

    auto* sim = app.add_subcommand("simulate", "sample one process path to CSV/binary");
    sim->add_option("--alpha", alpha_spec, kAlphaHelp)->required();
    sim->add_option("--process", process, "process tag: L|X|Z|Y|D")->required();
    sim->add_option("--seed", seed, "realization seed")->required();
    sim->add_option("--terms", terms, "series truncation N");
    sim->add_option("--grid", grid, "uniform grid size on [0,1]");
    sim->add_option("--out", out_path, "output file")->required();
    sim->add_option("--format", format, "csv|bin");
    sim->add_option("--quad-tol", quad_tol, "quadrature tolerance for Y");

    auto* pre = app.add_subcommand("predict", "predicted image dimension (JSON to stdout)");
    pre->add_option("--alpha", alpha_spec, kAlphaHelp)->required();
    pre->add_option("--set", set_spec, kSetHelp)->required();
    pre->add_option("--target", target, "X or Z")->required();
    pre->add_option("--nseq", nseq_str, "partition sizes, e.g. 64,128,...,4096");

    auto* scan = app.add_subcommand("partition-scan",
                                    "six localized dimension variants over partitions");
    scan->add_option("--alpha", alpha_spec, kAlphaHelp)->required();
    scan->add_option("--set", set_spec, kSetHelp)->required();
    scan->add_option("--nseq", nseq_str, "partition sizes");

    auto* dimc = app.add_subcommand("dim", "box-counting dimension of a value CSV");
    dimc->add_option("--in", in_path, "input CSV (value column)")->required();
    dimc->add_option("--k-min", k_min, "coarsest ladder exponent");
    dimc->add_option("--k-max", k_max, "finest ladder exponent");

    auto* cf = app.add_subcommand("cf-check", "empirical characteristic function check");
    cf->add_option("--alpha", alpha_spec, kAlphaHelp)->required();
    cf->add_option("--tag", target, "X or Z")->required();
    cf->add_option("--s", s, "increment start");
    cf->add_option("--t", t, "increment end");
    cf->add_option("--theta", theta_str, "frequency grid");
    cf->add_option("--seeds", mc_seeds, "Monte Carlo size M");
    cf->add_option("--seed-base", seed_base, "first seed")->required();
    cf->add_option("--terms", terms, "series truncation N");
    cf->add_option("--workers", workers, "worker threads (0 = MSTAB_WORKERS or auto)");

    auto* ex = app.add_subcommand("experiment", "experiment suites");
    auto* run = ex->add_subcommand("run", "run a JSON experiment config");
    run->add_option("config", config_path, "config JSON path")->required();
    run->add_option("--out", out_path, "output directory (default from config)");
    run->add_option("--workers", workers, "worker threads (0 = MSTAB_WORKERS or auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (!kernel_mode.empty()) mstab::kernels::select(kernel_mode);
        if (sim->parsed())
            return cmd_simulate(alpha_spec, process.at(0), seed, terms, grid, out_path, format,
                                quad_tol);
        if (pre->parsed())
            return cmd_predict(alpha_spec, set_spec, target.at(0),
                               nseq_str.empty() ? mstab::default_nseq() : parse_ints(nseq_str));
        if (scan->parsed())
            return cmd_partition_scan(alpha_spec, set_spec,
                                      nseq_str.empty() ? mstab::default_nseq()
                                                       : parse_ints(nseq_str));
        if (dimc->parsed()) return cmd_dim(in_path, k_min, k_max);
        if (cf->parsed())
            return cmd_cf_check(alpha_spec, target.at(0), s, t, parse_doubles(theta_str),
                                mc_seeds, seed_base, terms, workers);
        if (ex->parsed() && run->parsed())
            return cmd_experiment_run(config_path, out_path, workers);
        std::cerr << "no subcommand\n";
        return 64;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
