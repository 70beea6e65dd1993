#pragma once

// Stability-index functions alpha : [0,1] -> (0,2).
// Three kinds: constant, affine a + b*t, and C^1 piecewise-cubic through
// knots (monotone Hermite, Fritsch-Carlson slopes). All kinds expose an
// evaluable derivative, certified range bounds and a Lipschitz bound.

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mstab {

class AlphaFunction {
public:
    enum class Kind { Constant, Affine, Cubic };

    static AlphaFunction constant(double c);
    static AlphaFunction affine(double a, double b); // t -> a + b*t
    // knots: (t_j, alpha_j), t strictly increasing, t_0 = 0, t_last = 1
    static AlphaFunction cubic(std::vector<std::pair<double, double>> knots);

    double operator()(double t) const;
    double deriv(double t) const;

    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::Constant; }

    // Certified bounds of alpha over the whole domain [0,1].
    double lower() const { return lower_; }
    double upper() const { return upper_; }
    // sup |alpha'| over [0,1]
    double lipschitz() const { return lipschitz_; }

    // Exact inf/sup of alpha over the closed interval [lo,hi] in [0,1].
    std::pair<double, double> range_on(double lo, double hi) const;

    // Minimum of |alpha'| over [lo,hi]; 0 if the derivative changes sign.
    double min_abs_deriv(double lo, double hi) const;

    // "const:c" | "affine:a,b" | "cubic:t0,a0;t1,a1;..."
    static AlphaFunction parse(const std::string& spec);
    std::string to_spec() const;

    static AlphaFunction from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    AlphaFunction() = default;
    void validate() const;

    Kind kind_ = Kind::Constant;
    double a_ = 0, b_ = 0;                         // constant/affine coefficients
    std::vector<double> kt_, kv_, kd_;             // cubic knots: t, value, slope
    double lower_ = 0, upper_ = 0, lipschitz_ = 0;

    size_t segment_of(double t) const;
    void cubic_coeffs(size_t s, double& c0, double& c1, double& c2, double& c3) const;
};

} // namespace mstab
