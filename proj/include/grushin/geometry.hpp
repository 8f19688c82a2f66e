#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace grushin {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Normalize an angle to [0, 2*pi). Every angle stored by the library goes
/// through this one helper so repeated arithmetic cannot drift out of range.
inline double norm_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t == kTwoPi) t = 0.0;
    return t;
}

enum class Topology { Cone, Cylinder };
enum class BoundaryClass { Entrance, Regular, Exit };

inline const char* to_string(Topology t) {
    return t == Topology::Cone ? "cone" : "cylinder";
}
inline const char* to_string(BoundaryClass b) {
    switch (b) {
        case BoundaryClass::Entrance: return "entrance";
        case BoundaryClass::Regular: return "regular";
        default: return "exit";
    }
}

/// Feller class of the singular set {x=0} for the radial process.
/// Entrance for alpha <= -1, regular for -1 < alpha < 1, exit for alpha >= 1;
/// both endpoints belong to the closed (non-regular) side.
inline BoundaryClass classify_boundary(double alpha) {
    if (!std::isfinite(alpha))
        throw std::domain_error("classify_boundary: alpha must be finite");
    if (alpha <= -1.0) return BoundaryClass::Entrance;
    if (alpha < 1.0) return BoundaryClass::Regular;
    return BoundaryClass::Exit;
}

/// The surface parameter alpha with the quantities everything else keys off:
/// the radial process is a Bessel process of dimension d = 1 - alpha, and the
/// singular set is a point (cone, alpha<0) or a circle (cylinder, alpha>=0).
struct AlphaGeometry {
    double alpha = 0.0;
    double bessel_dim = 1.0;
    Topology topology = Topology::Cylinder;
    BoundaryClass boundary_class = BoundaryClass::Regular;

    static AlphaGeometry make(double alpha) {
        if (!std::isfinite(alpha))
            throw std::domain_error("AlphaGeometry: alpha must be finite");
        AlphaGeometry g;
        g.alpha = alpha;
        g.bessel_dim = 1.0 - alpha;
        g.topology = alpha < 0.0 ? Topology::Cone : Topology::Cylinder;
        g.boundary_class = classify_boundary(alpha);
        return g;
    }
};

/// Metric coefficients (g_xx, g_theta_theta) = (1, |x|^(-2 alpha)) away from Z.
inline std::pair<double, double> metric_coefficients(double alpha, double x) {
    if (x == 0.0)
        throw std::domain_error("metric_coefficients: metric is singular at x=0");
    return {1.0, std::pow(std::fabs(x), -2.0 * alpha)};
}

/// Natural-scale coordinate y = sgn(x) |x|^(alpha+1) / (alpha+1), valid for
/// alpha > -1. Odd, strictly increasing, fixes 0.
inline double to_natural_scale(double alpha, double x) {
    if (!(alpha > -1.0))
        throw std::domain_error("to_natural_scale: requires alpha > -1");
    if (x == 0.0) return 0.0;
    const double p = alpha + 1.0;
    return std::copysign(std::pow(std::fabs(x), p) / p, x);
}

inline double from_natural_scale(double alpha, double y) {
    if (!(alpha > -1.0))
        throw std::domain_error("from_natural_scale: requires alpha > -1");
    if (y == 0.0) return 0.0;
    const double p = alpha + 1.0;
    return std::copysign(std::pow(p * std::fabs(y), 1.0 / p), y);
}

/// A point of M_alpha in (x, theta) coordinates. x = 0 means the point lies
/// in the singular set; on the cone all such representations are the same
/// point and theta is canonically 0.
struct SurfacePoint {
    double x = 0.0;
    double theta = 0.0;

    bool operator==(const SurfacePoint&) const = default;

    static SurfacePoint make(double x, double theta, Topology topo) {
        SurfacePoint p;
        p.x = x;
        p.theta = (topo == Topology::Cone && x == 0.0) ? 0.0 : norm_angle(theta);
        return p;
    }
};

inline bool same_point(const SurfacePoint& p, const SurfacePoint& q, Topology topo) {
    if (topo == Topology::Cone && p.x == 0.0 && q.x == 0.0) return true;
    return p.x == q.x && norm_angle(p.theta) == norm_angle(q.theta);
}

/// Element of the isometry group Z/2Z x SO(2): an optional reflection in x
/// followed by a rotation of theta.
struct IsometryElement {
    bool reflect_x = false;
    double rotate = 0.0;

    IsometryElement compose(const IsometryElement& then) const {
        // group law: rotations add mod 2*pi, reflections xor
        return {reflect_x != then.reflect_x, norm_angle(rotate + then.rotate)};
    }

    SurfacePoint apply(const SurfacePoint& p, Topology topo) const {
        const double x = reflect_x ? -p.x : p.x;
        return SurfacePoint::make(x, p.theta + rotate, topo);
    }
};

}  // namespace grushin
