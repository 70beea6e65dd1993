#pragma once

// Symbolic subsets of [0,1] with exact dimension rules: intervals, points,
// middle-lambda Cantor sets and finite disjoint unions. Provides finite
// approximations, partition cuts, exact alpha ranges over the set, and the
// deterministic partition-formula evaluators for predicted image dimensions.

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mstab/alpha.hpp"

namespace mstab {

class BorelSet {
public:
    enum class Kind { Interval, Point, Cantor, Union };

    static BorelSet interval(double a, double b);
    static BorelSet point(double a);
    // Cantor construction on [a,b] removing the middle fraction lambda at
    // every level; dimension log 2 / log(2/(1-lambda)).
    static BorelSet middle_cantor(double a, double b, double lambda);
    static BorelSet finite_union(std::vector<BorelSet> members);

    Kind kind() const { return kind_; }
    double exact_dim() const;
    std::pair<double, double> convex_hull() const; // [inf, sup]

    // Finite stand-in: interval -> 2^L+1 uniform grid, Cantor -> the 2^(L+1)
    // endpoints of level-L construction intervals, union -> merged sorted.
    std::vector<double> approximate(int level) const;

    // Classification of the intersection with a closed cell [lo,hi].
    struct CellCut {
        bool empty = true;
        double dim = 0.0;
        double hull_lo = 0.0, hull_hi = 0.0;
    };
    CellCut cut(double lo, double hi) const;

    // SetSpec-valued intersection (exact where the algebra can express it;
    // unresolved Cantor boundary slivers degrade to their endpoint).
    std::optional<BorelSet> restricted_to(double lo, double hi) const;

    // Exact inf/sup of alpha over the set (descent certified to ~1e-9), and
    // the same over the intersection with a cell.
    std::pair<double, double> alpha_range(const AlphaFunction& alpha) const;
    std::pair<double, double> alpha_range_in(const AlphaFunction& alpha, double lo,
                                             double hi) const;

    double lambda() const { return lam_; }
    const std::vector<BorelSet>& members() const { return members_; }

    // "interval:a,b" | "point:a" | "cantor:a,b,l" | "union:[s1;s2;...]"
    static BorelSet parse(const std::string& spec);
    std::string to_spec() const;
    static BorelSet from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    BorelSet() = default;
    Kind kind_ = Kind::Point;
    double a_ = 0.0, b_ = 0.0, lam_ = 0.0;
    std::vector<BorelSet> members_;
};

struct Partition {
    int n;
    explicit Partition(int n_) : n(n_) {}
    double mesh() const { return 1.0 / n; }
    std::pair<double, double> cell(int i) const {
        return {static_cast<double>(i) / n, static_cast<double>(i + 1) / n};
    }
};

// d_*(E) = max(1, alpha_*(E)) dim(E); d^*(E) = max(1, alpha^*(E)) dim(E)
double d_star(const AlphaFunction& alpha, const BorelSet& e);
double d_upper_star(const AlphaFunction& alpha, const BorelSet& e);

// One localized cell statistic, maxed over a partition for each n.
enum class CellStat {
    DLower,            // d_*(E ∩ cell)
    DUpper,            // d^*(E ∩ cell)
    AlphaLowerDim,     // alpha_*(E ∩ cell) · dim(E ∩ cell)
    AlphaUpperDim,     // alpha^*(E ∩ cell) · dim
    AlphaLowerHullDim, // alpha_*(c(E ∩ cell)) · dim
    AlphaUpperHullDim, // alpha^*(c(E ∩ cell)) · dim
};
const char* cell_stat_name(CellStat s);

struct DimReport {
    std::string variant;
    std::vector<int> nseq;
    std::vector<double> values; // max over cells, per n
    double limit = 0.0;         // value at the largest n
    bool converged = false;
};

DimReport partition_scan(const AlphaFunction& alpha, const BorelSet& e,
                         const std::vector<int>& nseq, CellStat stat);

struct Prediction {
    double dim = 0.0; // min(1, limit)
    DimReport primary;
    std::optional<DimReport> secondary; // d_* variant for the field process
    bool converged = false;
    std::vector<std::string> warnings;
};

// Predicted image dimension of the measure-based process (alpha read at each
// jump location): min(1, limsup_n max_i alpha^*(E∩A_i^n) dim(E∩A_i^n)).
Prediction predict_dim_Z(const AlphaFunction& alpha, const BorelSet& e,
                         const std::vector<int>& nseq);

// Predicted image dimension of the field-based process (alpha read at the
// evaluation time): same formula with d^* in place of alpha^*·dim. Flags
// (does not reject) violated hypotheses: inf E > 0 and strict monotonicity
// of alpha over the hull of E.
Prediction predict_dim_X(const AlphaFunction& alpha, const BorelSet& e,
                         const std::vector<int>& nseq);

struct Lemma3Scan {
    std::array<DimReport, 6> variants; // order matches CellStat
    std::vector<double> spread_d;      // per-n |max d^* - max d_*|
    std::vector<double> spread_bound;  // K·mesh with K = sup|alpha'|
    bool spread_within_bound = true;
};

Lemma3Scan lemma3_scan(const AlphaFunction& alpha, const BorelSet& e,
                       const std::vector<int>& nseq);

std::vector<int> default_nseq(); // {64, 128, ..., 4096}

} // namespace mstab
