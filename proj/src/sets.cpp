#include "mstab/sets.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mstab {

namespace {

constexpr size_t kApproxGuard = size_t(1) << 24;

void check_unit(double x, const char* what) {
    if (!(x >= 0.0) || !(x <= 1.0))
        throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

int cantor_descent_depth(double len, double cell_width, double lambda) {
    const double shrink = 2.0 / (1.0 - lambda); // length contraction base
    const double ratio = std::max(1.0, len / std::max(cell_width, 1e-300));
    const int d = static_cast<int>(std::ceil(std::log(ratio) / std::log(shrink))) + 8;
    return std::min(std::max(d, 8), 64);
}

} // namespace

BorelSet BorelSet::interval(double a, double b) {
    check_unit(a, "interval endpoint");
    check_unit(b, "interval endpoint");
    if (a > b) throw std::invalid_argument("interval requires a <= b");
    BorelSet s;
    s.kind_ = Kind::Interval;
    s.a_ = a;
    s.b_ = b;
    return s;
}

BorelSet BorelSet::point(double a) {
    check_unit(a, "point");
    BorelSet s;
    s.kind_ = Kind::Point;
    s.a_ = s.b_ = a;
    return s;
}

BorelSet BorelSet::middle_cantor(double a, double b, double lambda) {
    check_unit(a, "cantor endpoint");
    check_unit(b, "cantor endpoint");
    if (!(a < b)) throw std::invalid_argument("cantor requires a < b");
    if (!(lambda > 0.0) || !(lambda < 1.0))
        throw std::invalid_argument("cantor gap ratio must lie in (0,1)");
    BorelSet s;
    s.kind_ = Kind::Cantor;
    s.a_ = a;
    s.b_ = b;
    s.lam_ = lambda;
    return s;
}

BorelSet BorelSet::finite_union(std::vector<BorelSet> members) {
    if (members.empty()) throw std::invalid_argument("union needs at least one member");
    std::sort(members.begin(), members.end(), [](const BorelSet& x, const BorelSet& y) {
        return x.convex_hull().first < y.convex_hull().first;
    });
    for (size_t i = 0; i + 1 < members.size(); ++i) {
        if (!(members[i].convex_hull().second < members[i + 1].convex_hull().first))
            throw std::invalid_argument("union members must have disjoint convex hulls");
    }
    BorelSet s;
    s.kind_ = Kind::Union;
    s.members_ = std::move(members);
    return s;
}

double BorelSet::exact_dim() const {
    switch (kind_) {
        case Kind::Interval: return a_ < b_ ? 1.0 : 0.0;
        case Kind::Point: return 0.0;
        case Kind::Cantor: return std::log(2.0) / std::log(2.0 / (1.0 - lam_));
        case Kind::Union: {
            double d = 0.0;
            for (const auto& m : members_) d = std::max(d, m.exact_dim());
            return d;
        }
    }
    return 0.0;
}

std::pair<double, double> BorelSet::convex_hull() const {
    switch (kind_) {
        case Kind::Interval:
        case Kind::Cantor: return {a_, b_};
        case Kind::Point: return {a_, a_};
        case Kind::Union: {
            double lo = 2.0, hi = -1.0;
            for (const auto& m : members_) {
                const auto h = m.convex_hull();
                lo = std::min(lo, h.first);
                hi = std::max(hi, h.second);
            }
            return {lo, hi};
        }
    }
    return {a_, a_};
}

std::vector<double> BorelSet::approximate(int level) const {
    if (level < 0) throw std::invalid_argument("approximation level must be >= 0");
    switch (kind_) {
        case Kind::Point: return {a_};
        case Kind::Interval: {
            if (a_ == b_) return {a_};
            if (level > 24) throw std::length_error("approximation exceeds the 2^24 point guard");
            const size_t n = (size_t(1) << level) + 1;
            std::vector<double> pts(n);
            for (size_t i = 0; i < n; ++i)
                pts[i] = a_ + (b_ - a_) * (static_cast<double>(i) / static_cast<double>(n - 1));
            pts.back() = b_;
            return pts;
        }
        case Kind::Cantor: {
            if (level > 23) throw std::length_error("approximation exceeds the 2^24 point guard");
            std::vector<std::pair<double, double>> iv = {{a_, b_}};
            for (int l = 0; l < level; ++l) {
                std::vector<std::pair<double, double>> next;
                next.reserve(iv.size() * 2);
                for (const auto& [u, v] : iv) {
                    const double w = (v - u) * (1.0 - lam_) * 0.5;
                    next.emplace_back(u, u + w);
                    next.emplace_back(v - w, v);
                }
                iv.swap(next);
            }
            std::vector<double> pts;
            pts.reserve(iv.size() * 2);
            for (const auto& [u, v] : iv) {
                pts.push_back(u);
                pts.push_back(v);
            }
            return pts;
        }
        case Kind::Union: {
            std::vector<double> pts;
            for (const auto& m : members_) {
                auto p = m.approximate(level);
                if (pts.size() + p.size() > kApproxGuard)
                    throw std::length_error("approximation exceeds the 2^24 point guard");
                pts.insert(pts.end(), p.begin(), p.end());
            }
            std::sort(pts.begin(), pts.end());
            return pts;
        }
    }
    return {};
}

namespace {

struct CutAcc {
    bool empty = true;
    double dim = 0.0;
    double hull_lo = 2.0, hull_hi = -1.0;
    void add_point(double p) {
        empty = false;
        hull_lo = std::min(hull_lo, p);
        hull_hi = std::max(hull_hi, p);
    }
    void add_span(double lo, double hi, double d) {
        empty = false;
        dim = std::max(dim, d);
        hull_lo = std::min(hull_lo, lo);
        hull_hi = std::max(hull_hi, hi);
    }
};

// Recursive classification of Cantor(a,b) ∩ [lo,hi].
void cut_cantor(double u, double v, double lambda, double cdim, double lo, double hi,
                int depth, CutAcc& acc) {
    if (v < lo || u > hi) return;
    if (u >= lo && v <= hi) {
        acc.add_span(u, v, cdim);
        return;
    }
    if (depth == 0) {
        // unresolved boundary sliver: keep its endpoints (they belong to the
        // set) but claim no dimension
        if (u >= lo && u <= hi) acc.add_point(u);
        if (v >= lo && v <= hi) acc.add_point(v);
        return;
    }
    const double w = (v - u) * (1.0 - lambda) * 0.5;
    cut_cantor(u, u + w, lambda, cdim, lo, hi, depth - 1, acc);
    cut_cantor(v - w, v, lambda, cdim, lo, hi, depth - 1, acc);
}

} // namespace

BorelSet::CellCut BorelSet::cut(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    CutAcc acc;
    switch (kind_) {
        case Kind::Point:
            if (a_ >= lo && a_ <= hi) acc.add_point(a_);
            break;
        case Kind::Interval: {
            const double l = std::max(a_, lo), r = std::min(b_, hi);
            if (l < r) acc.add_span(l, r, 1.0);
            else if (l == r) acc.add_point(l);
            break;
        }
        case Kind::Cantor: {
            const int depth = cantor_descent_depth(b_ - a_, hi - lo, lam_);
            cut_cantor(a_, b_, lam_, exact_dim(), lo, hi, depth, acc);
            break;
        }
        case Kind::Union:
            for (const auto& m : members_) {
                const CellCut c = m.cut(lo, hi);
                if (c.empty) continue;
                if (c.dim > 0.0) acc.add_span(c.hull_lo, c.hull_hi, c.dim);
                else {
                    acc.add_point(c.hull_lo);
                    acc.add_point(c.hull_hi);
                }
            }
            break;
    }
    CellCut out;
    out.empty = acc.empty;
    out.dim = acc.dim;
    out.hull_lo = acc.hull_lo;
    out.hull_hi = acc.hull_hi;
    return out;
}

namespace {

void restrict_cantor(double u, double v, double lambda, double lo, double hi, int depth,
                     std::vector<BorelSet>& parts) {
    if (v < lo || u > hi) return;
    if (u >= lo && v <= hi) {
        parts.push_back(BorelSet::middle_cantor(u, v, lambda));
        return;
    }
    if (depth == 0) {
        if (u >= lo && u <= hi) parts.push_back(BorelSet::point(u));
        else if (v >= lo && v <= hi) parts.push_back(BorelSet::point(v));
        return;
    }
    const double w = (v - u) * (1.0 - lambda) * 0.5;
    restrict_cantor(u, u + w, lambda, lo, hi, depth - 1, parts);
    restrict_cantor(v - w, v, lambda, lo, hi, depth - 1, parts);
}

} // namespace

std::optional<BorelSet> BorelSet::restricted_to(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    switch (kind_) {
        case Kind::Point:
            if (a_ >= lo && a_ <= hi) return *this;
            return std::nullopt;
        case Kind::Interval: {
            const double l = std::max(a_, lo), r = std::min(b_, hi);
            if (l < r) return interval(l, r);
            if (l == r) return point(l);
            return std::nullopt;
        }
        case Kind::Cantor: {
            const int depth = cantor_descent_depth(b_ - a_, hi - lo, lam_);
            std::vector<BorelSet> parts;
            restrict_cantor(a_, b_, lam_, lo, hi, depth, parts);
            if (parts.empty()) return std::nullopt;
            if (parts.size() == 1) return parts.front();
            // drop duplicate point slivers that woud break hull disjointness
            std::vector<BorelSet> keep;
            for (auto& p : parts) {
                if (!keep.empty()) {
                    const double prev = keep.back().convex_hull().second;
                    if (!(p.convex_hull().first > prev)) continue;
                }
                keep.push_back(std::move(p));
            }
            if (keep.size() == 1) return keep.front();
            return finite_union(std::move(keep));
        }
        case Kind::Union: {
            std::vector<BorelSet> parts;
            for (const auto& m : members_) {
                auto r = m.restricted_to(lo, hi);
                if (r) parts.push_back(std::move(*r));
            }
            if (parts.empty()) return std::nullopt;
            if (parts.size() == 1) return parts.front();
            return finite_union(std::move(parts));
        }
    }
    return std::nullopt;
}

namespace {

struct RangeAcc {
    bool any = false;
    double lo = 0.0, hi = 0.0;
    void add(double a, double b) {
        if (!any) {
            lo = a;
            hi = b;
            any = true;
        } else {
            lo = std::min(lo, a);
            hi = std::max(hi, b);
        }
    }
    void add(std::pair<double, double> r) { add(r.first, r.second); }
};

// alpha range over Cantor(u,v) ∩ [lo,hi], exact up to lip·len at the
// recursion floor. Monotone alpha resolves at interval endpoints, which
// belong to the set.
void range_cantor(const AlphaFunction& alpha, double u, double v, double lambda, double lo,
                  double hi, int depth, RangeAcc& acc) {
    if (v < lo || u > hi) return;
    const bool inside = (u >= lo && v <= hi);
    if (inside) {
        if (alpha.is_constant() || alpha.min_abs_deriv(u, v) > 0.0) {
            // extrema attained at u,v which are set points
            const double au = alpha(u), av = alpha(v);
            acc.add(std::min(au, av), std::max(au, av));
            return;
        }
        if ((v - u) * alpha.lipschitz() <= 1e-9 || depth <= 0) {
            acc.add(alpha.range_on(u, v));
            return;
        }
    } else if (depth <= 0 || (v - u) * alpha.lipschitz() <= 1e-9) {
        acc.add(alpha.range_on(std::max(u, lo), std::min(v, hi)));
        return;
    }
    const double w = (v - u) * (1.0 - lambda) * 0.5;
    range_cantor(alpha, u, u + w, lambda, lo, hi, depth - 1, acc);
    range_cantor(alpha, v - w, v, lambda, lo, hi, depth - 1, acc);
}

void range_set(const AlphaFunction& alpha, const BorelSet& e, double lo, double hi,
               RangeAcc& acc) {
    switch (e.kind()) {
        case BorelSet::Kind::Point: {
            const auto h = e.convex_hull();
            if (h.first >= lo && h.first <= hi) {
                const double a = alpha(h.first);
                acc.add(a, a);
            }
            break;
        }
        case BorelSet::Kind::Interval: {
            const auto h = e.convex_hull();
            const double l = std::max(h.first, lo), r = std::min(h.second, hi);
            if (l <= r) acc.add(alpha.range_on(l, r));
            break;
        }
        case BorelSet::Kind::Cantor: {
            const auto h = e.convex_hull();
            const int depth = cantor_descent_depth(h.second - h.first, hi - lo, e.lambda()) + 32;
            range_cantor(alpha, h.first, h.second, e.lambda(), lo, hi, depth, acc);
            break;
        }
        case BorelSet::Kind::Union:
            for (const auto& m : e.members()) range_set(alpha, m, lo, hi, acc);
            break;
    }
}

} // namespace

std::pair<double, double> BorelSet::alpha_range(const AlphaFunction& alpha) const {
    return alpha_range_in(alpha, 0.0, 1.0);
}

std::pair<double, double> BorelSet::alpha_range_in(const AlphaFunction& alpha, double lo,
                                                   double hi) const {
    RangeAcc acc;
    range_set(alpha, *this, lo, hi, acc);
    if (!acc.any) throw std::domain_error("alpha range of an empty intersection");
    return {acc.lo, acc.hi};
}

double d_star(const AlphaFunction& alpha, const BorelSet& e) {
    return std::max(1.0, e.alpha_range(alpha).first) * e.exact_dim();
}

double d_upper_star(const AlphaFunction& alpha, const BorelSet& e) {
    return std::max(1.0, e.alpha_range(alpha).second) * e.exact_dim();
}

const char* cell_stat_name(CellStat s) {
    switch (s) {
        case CellStat::DLower: return "d_*";
        case CellStat::DUpper: return "d^*";
        case CellStat::AlphaLowerDim: return "alpha_*dim";
        case CellStat::AlphaUpperDim: return "alpha^*dim";
        case CellStat::AlphaLowerHullDim: return "alpha_*(c)dim";
        case CellStat::AlphaUpperHullDim: return "alpha^*(c)dim";
    }
    return "?";
}

namespace {

double cell_value(const AlphaFunction& alpha, const BorelSet& e, double lo, double hi,
                  CellStat stat) {
    const auto cut = e.cut(lo, hi);
    if (cut.empty || cut.dim == 0.0) return 0.0; // dim(∅)=0 and dim-0 cells are inert
    switch (stat) {
        case CellStat::DLower:
            return std::max(1.0, e.alpha_range_in(alpha, lo, hi).first) * cut.dim;
        case CellStat::DUpper:
            return std::max(1.0, e.alpha_range_in(alpha, lo, hi).second) * cut.dim;
        case CellStat::AlphaLowerDim:
            return e.alpha_range_in(alpha, lo, hi).first * cut.dim;
        case CellStat::AlphaUpperDim:
            return e.alpha_range_in(alpha, lo, hi).second * cut.dim;
        case CellStat::AlphaLowerHullDim:
            return alpha.range_on(cut.hull_lo, cut.hull_hi).first * cut.dim;
        case CellStat::AlphaUpperHullDim:
            return alpha.range_on(cut.hull_lo, cut.hull_hi).second * cut.dim;
    }
    return 0.0;
}

void finalize(DimReport& r, const AlphaFunction& alpha) {
    r.limit = r.values.empty() ? 0.0 : r.values.back();
    r.converged = false;
    const size_t k = r.values.size();
    if (k >= 3) {
        const double tol =
            std::max(alpha.lipschitz() / static_cast<double>(r.nseq[k - 3]), 1e-12);
        r.converged = std::fabs(r.values[k - 1] - r.values[k - 2]) <= tol &&
                      std::fabs(r.values[k - 2] - r.values[k - 3]) <= tol;
    }
}

} // namespace

DimReport partition_scan(const AlphaFunction& alpha, const BorelSet& e,
                         const std::vector<int>& nseq, CellStat stat) {
    if (nseq.empty()) throw std::invalid_argument("nseq must be nonempty");
    for (size_t i = 1; i < nseq.size(); ++i)
        if (nseq[i] <= nseq[i - 1]) throw std::invalid_argument("nseq must be increasing");
    DimReport r;
    r.variant = cell_stat_name(stat);
    r.nseq = nseq;
    for (int n : nseq) {
        const Partition part(n);
        double best = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto [lo, hi] = part.cell(i);
            best = std::max(best, cell_value(alpha, e, lo, hi, stat));
        }
        r.values.push_back(best);
    }
    finalize(r, alpha);
    return r;
}

std::vector<int> default_nseq() { return {64, 128, 256, 512, 1024, 2048, 4096}; }

Prediction predict_dim_Z(const AlphaFunction& alpha, const BorelSet& e,
                         const std::vector<int>& nseq) {
    Prediction p;
    p.primary = partition_scan(alpha, e, nseq, CellStat::AlphaUpperDim);
    p.dim = std::min(1.0, p.primary.limit);
    p.converged = p.primary.converged;
    if (!p.converged) p.warnings.push_back("partition sequence has not stabilized");
    return p;
}

Prediction predict_dim_X(const AlphaFunction& alpha, const BorelSet& e,
                         const std::vector<int>& nseq) {
    Prediction p;
    p.primary = partition_scan(alpha, e, nseq, CellStat::DUpper);
    p.secondary = partition_scan(alpha, e, nseq, CellStat::DLower);
    p.dim = std::min(1.0, p.primary.limit);
    p.converged = p.primary.converged && p.secondary->converged;
    if (!p.converged) p.warnings.push_back("partition sequence has not stabilized");
    const auto hull = e.convex_hull();
    if (!(hull.first > 0.0))
        p.warnings.push_back("hypothesis inf(E) > 0 fails; the field-process formula is "
                             "asserted outside its proved hypotheses");
    if (alpha.min_abs_deriv(hull.first, hull.second) == 0.0)
        p.warnings.push_back("alpha is not strictly monotone over the hull of E; the "
                             "finite |t-s|/|alpha(t)-alpha(s)| hypothesis is unverified");
    return p;
}

Lemma3Scan lemma3_scan(const AlphaFunction& alpha, const BorelSet& e,
                       const std::vector<int>& nseq) {
    Lemma3Scan out;
    const CellStat stats[6] = {CellStat::DLower,         CellStat::DUpper,
                               CellStat::AlphaLowerDim,  CellStat::AlphaUpperDim,
                               CellStat::AlphaLowerHullDim, CellStat::AlphaUpperHullDim};
    for (int k = 0; k < 6; ++k) out.variants[k] = partition_scan(alpha, e, nseq, stats[k]);
    const double K = alpha.lipschitz();
    for (size_t i = 0; i < nseq.size(); ++i) {
        const double spread = std::fabs(out.variants[1].values[i] - out.variants[0].values[i]);
        const double bound = K / static_cast<double>(nseq[i]);
        out.spread_d.push_back(spread);
        out.spread_bound.push_back(bound);
        if (spread > bound + 1e-12) out.spread_within_bound = false;
    }
    return out;
}

BorelSet BorelSet::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("set spec needs kind:args, got '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const std::string args = spec.substr(colon + 1);
    auto nums = [](const std::string& s) {
        std::vector<double> out;
        std::istringstream in(s);
        std::string tok;
        while (std::getline(in, tok, ','))
            if (!tok.empty()) out.push_back(std::stod(tok));
        return out;
    };
    if (kind == "interval") {
        const auto v = nums(args);
        if (v.size() != 2) throw std::invalid_argument("interval takes a,b");
        return interval(v[0], v[1]);
    }
    if (kind == "point") {
        const auto v = nums(args);
        if (v.size() != 1) throw std::invalid_argument("point takes one value");
        return point(v[0]);
    }
    if (kind == "cantor") {
        const auto v = nums(args);
        if (v.size() != 3) throw std::invalid_argument("cantor takes a,b,lambda");
        return middle_cantor(v[0], v[1], v[2]);
    }
    if (kind == "union") {
        if (args.size() < 2 || args.front() != '[' || args.back() != ']')
            throw std::invalid_argument("union takes [spec;spec;...]");
        std::vector<BorelSet> members;
        std::string body = args.substr(1, args.size() - 2);
        size_t start = 0;
        int bracket = 0;
        for (size_t i = 0; i <= body.size(); ++i) {
            if (i < body.size() && body[i] == '[') ++bracket;
            if (i < body.size() && body[i] == ']') --bracket;
            if (i == body.size() || (body[i] == ';' && bracket == 0)) {
                const std::string part = body.substr(start, i - start);
                if (!part.empty()) members.push_back(parse(part));
                start = i + 1;
            }
        }
        return finite_union(std::move(members));
    }
    throw std::invalid_argument("unknown set kind '" + kind + "'");
}

std::string BorelSet::to_spec() const {
    std::ostringstream out;
    out.precision(17);
    switch (kind_) {
        case Kind::Interval: out << "interval:" << a_ << "," << b_; break;
        case Kind::Point: out << "point:" << a_; break;
        case Kind::Cantor: out << "cantor:" << a_ << "," << b_ << "," << lam_; break;
        case Kind::Union: {
            out << "union:[";
            for (size_t i = 0; i < members_.size(); ++i)
                out << (i ? ";" : "") << members_[i].to_spec();
            out << "]";
            break;
        }
    }
    return out.str();
}

BorelSet BorelSet::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "interval") return interval(j.at("a").get<double>(), j.at("b").get<double>());
    if (kind == "point") return point(j.at("a").get<double>());
    if (kind == "cantor")
        return middle_cantor(j.at("a").get<double>(), j.at("b").get<double>(),
                             j.at("lambda").get<double>());
    if (kind == "union") {
        std::vector<BorelSet> members;
        for (const auto& m : j.at("members")) members.push_back(from_json(m));
        return finite_union(std::move(members));
    }
    throw std::invalid_argument("unknown set kind '" + kind + "'");
}

nlohmann::json BorelSet::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case Kind::Interval:
            j["kind"] = "interval";
            j["a"] = a_;
            j["b"] = b_;
            break;
        case Kind::Point:
            j["kind"] = "point";
            j["a"] = a_;
            break;
        case Kind::Cantor:
            j["kind"] = "cantor";
            j["a"] = a_;
            j["b"] = b_;
            j["lambda"] = lam_;
            break;
        case Kind::Union: {
            j["kind"] = "union";
            auto arr = nlohmann::json::array();
            for (const auto& m : members_) arr.push_back(m.to_json());
            j["members"] = arr;
            break;
        }
    }
    return j;
}

} // namespace mstab
