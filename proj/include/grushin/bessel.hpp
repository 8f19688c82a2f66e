#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "grushin/random.hpp"

namespace grushin {

enum class BesqMode { Reflecting, Absorbing };

/// Squared-Bessel process parameters. Absorbing is only meaningful while the
/// origin is reachable (d < 2). Reflecting with d >= 2 is allowed but vacuous:
/// the boundary is never hit.
struct BesqParams {
    double dim = 1.0;
    BesqMode mode = BesqMode::Reflecting;

    void validate() const {
        if (!std::isfinite(dim)) throw std::domain_error("BesqParams: dim must be finite");
        if (mode == BesqMode::Absorbing && !(dim < 2.0))
            throw std::domain_error("BesqParams: absorbing mode requires dim < 2");
        if (mode == BesqMode::Reflecting && !(dim > 0.0))
            throw std::domain_error("BesqParams: reflecting mode requires dim > 0");
    }
};

/// One exact transition of the squared-Bessel process of dimension d >= 0,
/// dz = 2 sqrt(z) dW + d dt, over a step of length dt:
///
///   N  ~ Poisson(z / (2 dt)),   z' = 2 dt * Gamma(d/2 + N)
///
/// which is dt times a noncentral chi-squared draw. For 0 < d < 2 this is the
/// instantaneously-reflecting kernel; for d = 0 it carries the absorbing atom
/// P(z' = 0) = exp(-z / (2 dt)). Mean identity: E[z'] = z + d*dt.
inline double besq_step_exact(const BesqParams& params, double z, double dt, Rng& rng) {
    if (params.dim < 0.0)
        throw std::domain_error("besq_step_exact: dim < 0 has no exact kernel");
    if (!(dt > 0.0)) throw std::domain_error("besq_step_exact: dt must be positive");
    if (!(z >= 0.0)) throw std::domain_error("besq_step_exact: z must be >= 0");
    const long n = rng.poisson(z / (2.0 * dt));
    const double shape = 0.5 * params.dim + static_cast<double>(n);
    if (shape == 0.0) return 0.0;  // d = 0 and no Poisson mass: absorbed
    return 2.0 * dt * rng.gamma(shape);
}

/// P(T_0 <= t) for a 0-dimensional squared-Bessel process started at z.
inline double besq0_absorption_prob(double z, double t) {
    if (!(t > 0.0)) throw std::domain_error("besq0_absorption_prob: t must be positive");
    if (!(z >= 0.0)) throw std::domain_error("besq0_absorption_prob: z must be >= 0");
    return std::exp(-z / (2.0 * t));
}

/// Probability that a squared-Bessel bridge of dimension d in (0,2) from z0 to
/// z1 over dt (endpoints under the reflecting kernel) did NOT touch 0:
///
///   P = I_{1-d/2}(w) / I_{d/2-1}(w),   w = sqrt(z0 z1) / dt,
///
/// the ratio of the absorbed to the reflecting transition density. For d = 1
/// this reduces to tanh(w), the reflected-Brownian-bridge formula.
inline double besq_bridge_survival_prob(double dim, double z0, double z1, double dt) {
    if (!(dim > 0.0 && dim < 2.0))
        throw std::domain_error("besq_bridge_survival_prob: requires 0 < dim < 2");
    if (!(dt > 0.0)) throw std::domain_error("besq_bridge_survival_prob: dt > 0");
    if (z0 <= 0.0 || z1 <= 0.0) return 0.0;  // an endpoint sits at the boundary
    const double w = std::sqrt(z0 * z1) / dt;
    if (w >= 18.0) return 1.0;  // touching mass below ~1e-14 here
    // I_p(w) = (w/2)^p * S_p(w), S_p = sum_k (w^2/4)^k / (k! Gamma(k+p+1))
    const double nu = 0.5 * dim - 1.0;  // in (-1, 0)
    const double q = 0.25 * w * w;
    auto series = [q](double p) {
        double term = 1.0 / std::tgamma(p + 1.0);
        double sum = term;
        for (int k = 1; k < 200; ++k) {
            term *= q / (k * (k + p));
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return sum;
    };
    const double ratio = std::pow(0.5 * w, 2.0 - dim) * series(-nu) / series(nu);
    return ratio < 1.0 ? ratio : 1.0;
}

/// Scale function data for the radial process with skewness a at 0:
///   s(x) = -a (-x)^(1+alpha) for x < 0,  (1-a) x^(1+alpha) for x >= 0.
struct ScaleSpec {
    double alpha = -0.5;
    double a = 0.5;

    void validate() const {
        if (!(alpha > -1.0 && alpha < 1.0))
            throw std::domain_error("ScaleSpec: requires alpha in (-1,1)");
        if (!(a >= 0.0 && a <= 1.0))
            throw std::domain_error("ScaleSpec: requires a in [0,1]");
    }
};

inline double scale_function(const ScaleSpec& spec, double x) {
    spec.validate();
    const double p = 1.0 + spec.alpha;
    if (x < 0.0) return -spec.a * std::pow(-x, p);
    if (x == 0.0) return 0.0;
    return (1.0 - spec.a) * std::pow(x, p);
}

/// Speed measure data: densities on R \ {0} plus an atom of mass gamma at 0.
struct SpeedSpec {
    double alpha = -0.5;
    double a = 0.5;
    double gamma = 0.0;  // stickiness; may be +infinity

    void validate() const {
        if (!(alpha > -1.0 && alpha < 1.0))
            throw std::domain_error("SpeedSpec: requires alpha in (-1,1)");
        if (!(a > 0.0 && a < 1.0))
            throw std::domain_error("SpeedSpec: requires a in (0,1)");
        if (std::isnan(gamma) || gamma < 0.0)
            throw std::domain_error("SpeedSpec: requires gamma >= 0");
    }
};

/// Density of the speed measure at x != 0:
///   2 / (a (1+alpha) (-x)^alpha)      for x < 0,
///   2 / ((1-a) (1+alpha) x^alpha)     for x > 0.
inline double speed_density(const SpeedSpec& spec, double x) {
    spec.validate();
    if (x == 0.0)
        throw std::domain_error("speed_density: the atom at 0 is not a density; use speed_measure_interval");
    const double p = 1.0 + spec.alpha;
    if (x < 0.0) return 2.0 / (spec.a * p * std::pow(-x, spec.alpha));
    return 2.0 / ((1.0 - spec.a) * p * std::pow(x, spec.alpha));
}

/// Closed-form mass of the speed measure on the open interval (lo, hi),
/// including the atom gamma when lo < 0 < hi. On (0,c]:
///   2 c^(1-alpha) / ((1-a)(1+alpha)(1-alpha)).
inline double speed_measure_interval(const SpeedSpec& spec, double lo, double hi) {
    spec.validate();
    if (!(lo < hi)) throw std::domain_error("speed_measure_interval: requires lo < hi");
    const double p = 1.0 + spec.alpha;
    const double q = 1.0 - spec.alpha;
    auto pos_mass = [&](double c) {  // mass of (0, c]
        return 2.0 * std::pow(c, q) / ((1.0 - spec.a) * p * q);
    };
    auto neg_mass = [&](double c) {  // mass of [-c, 0)
        return 2.0 * std::pow(c, q) / (spec.a * p * q);
    };
    double mass = 0.0;
    if (hi > 0.0) mass += pos_mass(hi) - (lo > 0.0 ? pos_mass(lo) : 0.0);
    if (lo < 0.0) mass += neg_mass(-lo) - (hi < 0.0 ? neg_mass(-hi) : 0.0);
    if (lo < 0.0 && hi > 0.0) mass += spec.gamma;
    return mass;
}

/// P(hit hi before lo | start x) = (s(x) - s(lo)) / (s(hi) - s(lo)).
/// From 0 with a symmetric interval this is exactly the skewness a.
inline double hitting_prob(const ScaleSpec& spec, double x, double lo, double hi) {
    spec.validate();
    if (!(lo < hi)) throw std::domain_error("hitting_prob: degenerate interval");
    if (!(lo <= x && x <= hi)) throw std::domain_error("hitting_prob: requires lo <= x <= hi");
    const double slo = scale_function(spec, lo);
    const double shi = scale_function(spec, hi);
    if (!(shi > slo)) throw std::domain_error("hitting_prob: degenerate scale interval");
    return (scale_function(spec, x) - slo) / (shi - slo);
}

}  // namespace grushin
