#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "grushin/angular.hpp"
#include "grushin/errors.hpp"
#include "grushin/geometry.hpp"

namespace grushin {

/// A finite union of open arcs of the circle, stored normalized to [0, 2*pi)
/// (an arc crossing 0 is split in two).
struct ArcSet {
    std::vector<std::pair<double, double>> arcs;

    static ArcSet from_arcs(const std::vector<std::pair<double, double>>& raw) {
        ArcSet s;
        for (auto [lo, hi] : raw) {
            if (!(hi > lo)) throw ConfigError("arc set: arc endpoints must satisfy lo < hi");
            if (!(hi - lo <= kTwoPi)) throw ConfigError("arc set: arc longer than the circle");
            const double nlo = norm_angle(lo);
            double nhi = nlo + (hi - lo);
            if (nhi <= kTwoPi) {
                s.arcs.emplace_back(nlo, nhi);
            } else {
                s.arcs.emplace_back(nlo, kTwoPi);
                s.arcs.emplace_back(0.0, nhi - kTwoPi);
            }
        }
        std::sort(s.arcs.begin(), s.arcs.end());
        // merge overlaps
        std::vector<std::pair<double, double>> merged;
        for (auto [lo, hi] : s.arcs) {
            if (!merged.empty() && lo <= merged.back().second) {
                merged.back().second = std::max(merged.back().second, hi);
            } else {
                merged.emplace_back(lo, hi);
            }
        }
        s.arcs = std::move(merged);
        return s;
    }

    bool contains(double theta) const {
        const double t = norm_angle(theta);
        for (auto [lo, hi] : arcs)
            if (t > lo && t < hi) return true;
        return false;
    }

    double measure() const {
        double m = 0.0;
        for (auto [lo, hi] : arcs) m += hi - lo;
        return m;
    }

    bool operator==(const ArcSet&) const = default;
};

/// The behavior rule at the singular set, one per extension in the
/// classification: absorbed; cone with stickiness gamma, skewness a and
/// entrance measures mu+/mu-; entrance-only (alpha <= -1); and the three
/// cylinder rules (fair signs, same-side reflection, non-local A-set signs).
struct ExtensionSpec {
    enum class Kind {
        Absorbed,
        Cone,
        EntranceOnly,
        CylinderSymmetric,
        CylinderNeumann,
        CylinderNonLocal,
    };

    Kind kind = Kind::Cone;
    double gamma = 0.0;  // Cone only; +infinity degenerates to Absorbed
    double a = 0.5;      // Cone / EntranceOnly
    AngularMeasure mu_plus = AngularMeasure::uniform();
    AngularMeasure mu_minus = AngularMeasure::uniform();
    ArcSet nonlocal_set;  // CylinderNonLocal

    static ExtensionSpec absorbed() {
        ExtensionSpec s;
        s.kind = Kind::Absorbed;
        return s;
    }
    static ExtensionSpec cone(double gamma, double a,
                              AngularMeasure mu_plus = AngularMeasure::uniform(),
                              AngularMeasure mu_minus = AngularMeasure::uniform()) {
        ExtensionSpec s;
        s.kind = Kind::Cone;
        s.gamma = gamma;
        s.a = a;
        s.mu_plus = std::move(mu_plus);
        s.mu_minus = std::move(mu_minus);
        return s;
    }
    /// The isometry-invariant cone extension: a = 1/2, gamma = 0, uniform angles.
    static ExtensionSpec cone_symmetric() { return cone(0.0, 0.5); }
    static ExtensionSpec entrance_only(double a,
                                       AngularMeasure mu_plus = AngularMeasure::uniform(),
                                       AngularMeasure mu_minus = AngularMeasure::uniform()) {
        ExtensionSpec s;
        s.kind = Kind::EntranceOnly;
        s.a = a;
        s.mu_plus = std::move(mu_plus);
        s.mu_minus = std::move(mu_minus);
        return s;
    }
    static ExtensionSpec cylinder_symmetric() {
        ExtensionSpec s;
        s.kind = Kind::CylinderSymmetric;
        return s;
    }
    static ExtensionSpec cylinder_neumann() {
        ExtensionSpec s;
        s.kind = Kind::CylinderNeumann;
        return s;
    }
    static ExtensionSpec cylinder_nonlocal(ArcSet set) {
        ExtensionSpec s;
        s.kind = Kind::CylinderNonLocal;
        s.nonlocal_set = std::move(set);
        return s;
    }

    bool is_cylinder_kind() const {
        return kind == Kind::CylinderSymmetric || kind == Kind::CylinderNeumann ||
               kind == Kind::CylinderNonLocal;
    }

    /// True when the process stops at Z: Absorbed, or a cone with infinite
    /// stickiness (the degenerate gamma = infinity case).
    bool absorbs() const {
        return kind == Kind::Absorbed ||
               (kind == Kind::Cone && std::isinf(gamma));
    }

    /// Compatibility with the geometry; throws ConfigError naming the field.
    void validate_for(const AlphaGeometry& geom) const {
        const double alpha = geom.alpha;
        switch (kind) {
            case Kind::Absorbed:
                // alpha >= 1 (exit boundary), the degenerate cone, or the
                // never-leaves-Z choice available in the entrance regime.
                if (!(alpha >= 1.0 || alpha < 0.0))
                    throw ConfigError("extension: absorbed requires alpha >= 1 or alpha < 0");
                return;
            case Kind::Cone:
                if (!(alpha > -1.0 && alpha < 0.0))
                    throw ConfigError("extension: cone kind requires alpha in (-1,0)");
                if (std::isnan(gamma) || gamma < 0.0)
                    throw ConfigError("extension.gamma: must be >= 0 (or infinity)");
                if (!(a >= 0.0 && a <= 1.0))
                    throw ConfigError("extension.a: must lie in [0,1]");
                if (a > 0.0) mu_plus.validate();
                if (a < 1.0) mu_minus.validate();
                return;
            case Kind::EntranceOnly:
                if (!(alpha <= -1.0))
                    throw ConfigError("extension: entrance_only requires alpha <= -1");
                if (!(a >= 0.0 && a <= 1.0))
                    throw ConfigError("extension.a: must lie in [0,1]");
                if (a > 0.0) mu_plus.validate();
                if (a < 1.0) mu_minus.validate();
                return;
            case Kind::CylinderSymmetric:
            case Kind::CylinderNeumann:
                if (!(alpha >= 0.0 && alpha < 1.0))
                    throw ConfigError("extension: cylinder kinds require alpha in [0,1)");
                return;
            case Kind::CylinderNonLocal: {
                if (!(alpha >= 0.0 && alpha < 1.0))
                    throw ConfigError("extension: cylinder kinds require alpha in [0,1)");
                const double m = nonlocal_set.measure();
                if (!(m > 0.0))
                    throw ConfigError("extension.arcs: A must be non-empty");
                if (!(m < kTwoPi))
                    throw ConfigError("extension.arcs: the complement of A must have interior");
                return;
            }
        }
    }

    bool operator==(const ExtensionSpec&) const = default;
};

inline const char* to_string(ExtensionSpec::Kind k) {
    using K = ExtensionSpec::Kind;
    switch (k) {
        case K::Absorbed: return "absorbed";
        case K::Cone: return "cone";
        case K::EntranceOnly: return "entrance_only";
        case K::CylinderSymmetric: return "cylinder_symmetric";
        case K::CylinderNeumann: return "cylinder_neumann";
        default: return "cylinder_nonlocal";
    }
}

}  // namespace grushin
