#include "mstab/alpha.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mstab {

namespace {

void check_open_02(double lo, double hi) {
    if (!(lo > 0.0) || !(hi < 2.0) || !(lo <= hi))
        throw std::domain_error("alpha function must range in a closed subset of (0,2), got [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

} // namespace

AlphaFunction AlphaFunction::constant(double c) {
    AlphaFunction f;
    f.kind_ = Kind::Constant;
    f.a_ = c;
    f.lower_ = f.upper_ = c;
    f.lipschitz_ = 0.0;
    f.validate();
    return f;
}

AlphaFunction AlphaFunction::affine(double a, double b) {
    AlphaFunction f;
    f.kind_ = Kind::Affine;
    f.a_ = a;
    f.b_ = b;
    f.lower_ = std::min(a, a + b);
    f.upper_ = std::max(a, a + b);
    f.lipschitz_ = std::fabs(b);
    f.validate();
    return f;
}

AlphaFunction AlphaFunction::cubic(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw std::invalid_argument("cubic alpha needs at least 2 knots");
    AlphaFunction f;
    f.kind_ = Kind::Cubic;
    for (auto& [t, v] : knots) {
        f.kt_.push_back(t);
        f.kv_.push_back(v);
    }
    if (f.kt_.front() != 0.0 || f.kt_.back() != 1.0)
        throw std::invalid_argument("cubic alpha knots must start at t=0 and end at t=1");
    for (size_t i = 1; i < f.kt_.size(); ++i)
        if (!(f.kt_[i] > f.kt_[i - 1]))
            throw std::invalid_argument("cubic alpha knot times must be strictly increasing");

    // Fritsch-Carlson monotone slopes: keeps each segment inside the range of
    // its endpoint values, which is what makes lower()/upper() certified.
    const size_t n = f.kt_.size();
    std::vector<double> d(n - 1);
    for (size_t i = 0; i + 1 < n; ++i)
        d[i] = (f.kv_[i + 1] - f.kv_[i]) / (f.kt_[i + 1] - f.kt_[i]);
    f.kd_.resize(n);
    f.kd_[0] = d[0];
    f.kd_[n - 1] = d[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            f.kd_[i] = 0.0;
        } else {
            const double w1 = 2.0 * (f.kt_[i + 1] - f.kt_[i]) + (f.kt_[i] - f.kt_[i - 1]);
            const double w2 = (f.kt_[i + 1] - f.kt_[i]) + 2.0 * (f.kt_[i] - f.kt_[i - 1]);
            f.kd_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    for (size_t i = 0; i + 1 < n; ++i) {
        if (d[i] == 0.0) {
            f.kd_[i] = f.kd_[i + 1] = 0.0;
        } else {
            const double a = f.kd_[i] / d[i], b = f.kd_[i + 1] / d[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double tau = 3.0 / std::sqrt(s);
                f.kd_[i] = tau * a * d[i];
                f.kd_[i + 1] = tau * b * d[i];
            }
        }
    }

    f.lower_ = *std::min_element(f.kv_.begin(), f.kv_.end());
    f.upper_ = *std::max_element(f.kv_.begin(), f.kv_.end());
    // sup |p'| per segment: p' is quadratic, extrema at segment ends or vertex
    double lip = 0.0;
    for (size_t s = 0; s + 1 < n; ++s) {
        double c0, c1, c2, c3;
        f.cubic_coeffs(s, c0, c1, c2, c3);
        const double w = f.kt_[s + 1] - f.kt_[s];
        auto dp = [&](double x) { return c1 + 2.0 * c2 * x + 3.0 * c3 * x * x; };
        lip = std::max({lip, std::fabs(dp(0.0)), std::fabs(dp(w))});
        if (c3 != 0.0) {
            const double xv = -c2 / (3.0 * c3);
            if (xv > 0.0 && xv < w) lip = std::max(lip, std::fabs(dp(xv)));
        }
    }
    f.lipschitz_ = lip;
    f.validate();
    return f;
}

void AlphaFunction::validate() const { check_open_02(lower_, upper_); }

size_t AlphaFunction::segment_of(double t) const {
    const auto it = std::upper_bound(kt_.begin(), kt_.end(), t);
    size_t s = static_cast<size_t>(it - kt_.begin());
    if (s > 0) --s;
    return std::min(s, kt_.size() - 2);
}

void AlphaFunction::cubic_coeffs(size_t s, double& c0, double& c1, double& c2,
                                 double& c3) const {
    const double w = kt_[s + 1] - kt_[s];
    const double dv = kv_[s + 1] - kv_[s];
    c0 = kv_[s];
    c1 = kd_[s];
    c2 = (3.0 * dv / w - 2.0 * kd_[s] - kd_[s + 1]) / w;
    c3 = (kd_[s] + kd_[s + 1] - 2.0 * dv / w) / (w * w);
}

double AlphaFunction::operator()(double t) const {
    switch (kind_) {
        case Kind::Constant: return a_;
        case Kind::Affine: return a_ + b_ * t;
        case Kind::Cubic: {
            const size_t s = segment_of(t);
            double c0, c1, c2, c3;
            cubic_coeffs(s, c0, c1, c2, c3);
            const double x = t - kt_[s];
            return c0 + x * (c1 + x * (c2 + x * c3));
        }
    }
    return a_;
}

double AlphaFunction::deriv(double t) const {
    switch (kind_) {
        case Kind::Constant: return 0.0;
        case Kind::Affine: return b_;
        case Kind::Cubic: {
            const size_t s = segment_of(t);
            double c0, c1, c2, c3;
            cubic_coeffs(s, c0, c1, c2, c3);
            const double x = t - kt_[s];
            return c1 + x * (2.0 * c2 + x * 3.0 * c3);
        }
    }
    return 0.0;
}

std::pair<double, double> AlphaFunction::range_on(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    switch (kind_) {
        case Kind::Constant: return {a_, a_};
        case Kind::Affine: {
            const double va = a_ + b_ * lo, vb = a_ + b_ * hi;
            return {std::min(va, vb), std::max(va, vb)};
        }
        case Kind::Cubic: {
            double mn = std::min((*this)(lo), (*this)(hi));
            double mx = std::max((*this)(lo), (*this)(hi));
            const size_t s0 = segment_of(lo), s1 = segment_of(hi);
            for (size_t s = s0; s <= s1; ++s) {
                double c0, c1, c2, c3;
                cubic_coeffs(s, c0, c1, c2, c3);
                const double xl = std::max(lo, kt_[s]) - kt_[s];
                const double xr = std::min(hi, kt_[s + 1]) - kt_[s];
                // interior critical points of the cubic
                const double A = 3.0 * c3, B = 2.0 * c2, C = c1;
                double roots[2];
                int nr = 0;
                if (A == 0.0) {
                    if (B != 0.0) roots[nr++] = -C / B;
                } else {
                    const double disc = B * B - 4.0 * A * C;
                    if (disc >= 0.0) {
                        const double sq = std::sqrt(disc);
                        roots[nr++] = (-B - sq) / (2.0 * A);
                        roots[nr++] = (-B + sq) / (2.0 * A);
                    }
                }
                for (int k = 0; k < nr; ++k) {
                    const double x = roots[k];
                    if (x > xl && x < xr) {
                        const double v = c0 + x * (c1 + x * (c2 + x * c3));
                        mn = std::min(mn, v);
                        mx = std::max(mx, v);
                    }
                }
            }
            return {mn, mx};
        }
    }
    return {a_, a_};
}

double AlphaFunction::min_abs_deriv(double lo, double hi) const {
    if (lo > hi) std::swap(lo, hi);
    switch (kind_) {
        case Kind::Constant: return 0.0;
        case Kind::Affine: return std::fabs(b_);
        case Kind::Cubic: {
            // derivative is piecewise quadratic; scan segment extrema and a
            // sign change anywhere forces 0
            double mn = std::min(std::fabs(deriv(lo)), std::fabs(deriv(hi)));
            double prev = deriv(lo);
            const size_t s0 = segment_of(lo), s1 = segment_of(hi);
            for (size_t s = s0; s <= s1; ++s) {
                double c0, c1, c2, c3;
                cubic_coeffs(s, c0, c1, c2, c3);
                const double xl = std::max(lo, kt_[s]) - kt_[s];
                const double xr = std::min(hi, kt_[s + 1]) - kt_[s];
                auto dp = [&](double x) { return c1 + x * (2.0 * c2 + 3.0 * c3 * x); };
                for (double x : {xl, xr, (c3 != 0.0 ? -c2 / (3.0 * c3) : xl)}) {
                    if (x < xl || x > xr) continue;
                    const double v = dp(x);
                    if (v * prev < 0.0) return 0.0;
                    mn = std::min(mn, std::fabs(v));
                    prev = (v != 0.0) ? v : prev;
                    if (v == 0.0) return 0.0;
                }
            }
            return mn;
        }
    }
    return 0.0;
}

AlphaFunction AlphaFunction::parse(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("alpha spec needs kind:args, got '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const std::string args = spec.substr(colon + 1);
    auto nums = [](const std::string& s, char sep) {
        std::vector<double> out;
        std::istringstream in(s);
        std::string tok;
        while (std::getline(in, tok, sep))
            if (!tok.empty()) out.push_back(std::stod(tok));
        return out;
    };
    if (kind == "const" || kind == "constant") {
        const auto v = nums(args, ',');
        if (v.size() != 1) throw std::invalid_argument("const alpha takes one value");
        return constant(v[0]);
    }
    if (kind == "affine") {
        const auto v = nums(args, ',');
        if (v.size() != 2) throw std::invalid_argument("affine alpha takes a,b");
        return affine(v[0], v[1]);
    }
    if (kind == "cubic") {
        std::vector<std::pair<double, double>> knots;
        std::istringstream in(args);
        std::string pair;
        while (std::getline(in, pair, ';')) {
            const auto v = nums(pair, ',');
            if (v.size() != 2) throw std::invalid_argument("cubic alpha knots are t,a pairs");
            knots.emplace_back(v[0], v[1]);
        }
        return cubic(std::move(knots));
    }
    throw std::invalid_argument("unknown alpha kind '" + kind + "'");
}

std::string AlphaFunction::to_spec() const {
    std::ostringstream out;
    out.precision(17);
    switch (kind_) {
        case Kind::Constant: out << "const:" << a_; break;
        case Kind::Affine: out << "affine:" << a_ << "," << b_; break;
        case Kind::Cubic:
            out << "cubic:";
            for (size_t i = 0; i < kt_.size(); ++i)
                out << (i ? ";" : "") << kt_[i] << "," << kv_[i];
            break;
    }
    return out.str();
}

AlphaFunction AlphaFunction::from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant" || kind == "const") return constant(j.at("c").get<double>());
    if (kind == "affine") return affine(j.at("a").get<double>(), j.at("b").get<double>());
    if (kind == "cubic") {
        std::vector<std::pair<double, double>> knots;
        for (const auto& k : j.at("knots"))
            knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
        return cubic(std::move(knots));
    }
    throw std::invalid_argument("unknown alpha kind '" + kind + "'");
}

nlohmann::json AlphaFunction::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case Kind::Constant:
            j["kind"] = "constant";
            j["c"] = a_;
            break;
        case Kind::Affine:
            j["kind"] = "affine";
            j["a"] = a_;
            j["b"] = b_;
            break;
        case Kind::Cubic: {
            j["kind"] = "cubic";
            auto arr = nlohmann::json::array();
            for (size_t i = 0; i < kt_.size(); ++i)
                arr.push_back({kt_[i], kv_[i]});
            j["knots"] = arr;
            break;
        }
    }
    return j;
}

} // namespace mstab
