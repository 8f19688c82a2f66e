#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "grushin/errors.hpp"
#include "grushin/geometry.hpp"
#include "grushin/random.hpp"

namespace grushin {

/// A probability measure on the circle, used as the law of the entrance angle
/// when the process leaves the singular point.
///
/// `rotation` is a pushforward offset applied after sampling; rotating a
/// measure by phi and sampling with the same random stream yields exactly the
/// base sample plus phi, which is what couples rotated runs bit-for-bit.
struct AngularMeasure {
    enum class Kind { Uniform, Atom, AtomMixture, PiecewiseDensity };

    Kind kind = Kind::Uniform;
    double atom_theta = 0.0;                        // Atom
    std::vector<std::pair<double, double>> atoms;   // AtomMixture: (theta, weight)
    std::vector<double> breakpoints;                // PiecewiseDensity: ascending, first 0, last 2*pi
    std::vector<double> values;                     // density value per cell
    double rotation = 0.0;

    static AngularMeasure uniform() { return {}; }

    static AngularMeasure atom(double theta) {
        AngularMeasure m;
        m.kind = Kind::Atom;
        m.atom_theta = norm_angle(theta);
        return m;
    }

    static AngularMeasure atom_mixture(std::vector<std::pair<double, double>> atoms) {
        AngularMeasure m;
        m.kind = Kind::AtomMixture;
        m.atoms = std::move(atoms);
        for (auto& [t, w] : m.atoms) t = norm_angle(t);
        m.validate();
        return m;
    }

    static AngularMeasure piecewise_density(std::vector<double> breakpoints,
                                            std::vector<double> values) {
        AngularMeasure m;
        m.kind = Kind::PiecewiseDensity;
        m.breakpoints = std::move(breakpoints);
        m.values = std::move(values);
        m.validate();
        return m;
    }

    void validate() const {
        switch (kind) {
            case Kind::Uniform:
            case Kind::Atom:
                return;
            case Kind::AtomMixture: {
                if (atoms.empty())
                    throw ConfigError("angular measure: atom mixture needs at least one atom");
                double total = 0.0;
                for (const auto& [t, w] : atoms) {
                    if (!(w >= 0.0)) throw ConfigError("angular measure: atom weights must be >= 0");
                    total += w;
                }
                if (std::fabs(total - 1.0) > 1e-9)
                    throw ConfigError("angular measure: atom weights must sum to 1");
                return;
            }
            case Kind::PiecewiseDensity: {
                if (breakpoints.size() < 2 || values.size() + 1 != breakpoints.size())
                    throw ConfigError("angular measure: need n+1 breakpoints for n density values");
                if (breakpoints.front() != 0.0 || std::fabs(breakpoints.back() - kTwoPi) > 1e-12)
                    throw ConfigError("angular measure: breakpoints must span [0, 2*pi]");
                double total = 0.0;
                for (std::size_t i = 0; i < values.size(); ++i) {
                    if (!(breakpoints[i] < breakpoints[i + 1]))
                        throw ConfigError("angular measure: breakpoints must be strictly increasing");
                    if (!(values[i] >= 0.0))
                        throw ConfigError("angular measure: density values must be >= 0");
                    total += values[i] * (breakpoints[i + 1] - breakpoints[i]);
                }
                if (std::fabs(total - 1.0) > 1e-9)
                    throw ConfigError("angular measure: density must integrate to 1");
                return;
            }
        }
    }

    double sample(Rng& rng) const {
        double theta = 0.0;
        switch (kind) {
            case Kind::Uniform:
                theta = kTwoPi * rng.uniform();
                break;
            case Kind::Atom:
                theta = atom_theta;
                break;
            case Kind::AtomMixture: {
                double u = rng.uniform();
                theta = atoms.back().first;
                for (const auto& [t, w] : atoms) {
                    if (u < w) {
                        theta = t;
                        break;
                    }
                    u -= w;
                }
                break;
            }
            case Kind::PiecewiseDensity: {
                double u = rng.uniform();
                theta = breakpoints.back();
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const double cell = values[i] * (breakpoints[i + 1] - breakpoints[i]);
                    if (u < cell) {
                        theta = values[i] > 0.0 ? breakpoints[i] + u / values[i]
                                                : breakpoints[i];
                        break;
                    }
                    u -= cell;
                }
                break;
            }
        }
        return norm_angle(theta + rotation);
    }

    AngularMeasure rotated(double phi) const {
        AngularMeasure m = *this;
        m.rotation = norm_angle(m.rotation + phi);
        return m;
    }

    bool operator==(const AngularMeasure&) const = default;
};

}  // namespace grushin
