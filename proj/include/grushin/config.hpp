#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grushin/errors.hpp"
#include "grushin/extension.hpp"
#include "grushin/geometry.hpp"
#include "grushin/simulate.hpp"
#include "grushin/test_function.hpp"

namespace grushin {

using nlohmann::json;

namespace cfgdetail {

inline const json& require_field(const json& j, const char* field, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    auto it = j.find(field);
    if (it == j.end()) throw ConfigError(path + "." + field + ": missing required field");
    return *it;
}

inline double require_number(const json& j, const char* field, const std::string& path) {
    const json& v = require_field(j, field, path);
    if (!v.is_number()) throw ConfigError(path + "." + field + ": expected a number");
    return v.get<double>();
}

inline double optional_number(const json& j, const char* field, double fallback,
                              const std::string& path) {
    if (!j.is_object() || !j.contains(field)) return fallback;
    const json& v = j.at(field);
    if (!v.is_number()) throw ConfigError(path + "." + field + ": expected a number");
    return v.get<double>();
}

inline std::string require_string(const json& j, const char* field, const std::string& path) {
    const json& v = require_field(j, field, path);
    if (!v.is_string()) throw ConfigError(path + "." + field + ": expected a string");
    return v.get<std::string>();
}

}  // namespace cfgdetail

// ---- angular measures ----

inline AngularMeasure angular_measure_from_json(const json& j, const std::string& path) {
    using cfgdetail::require_field;
    using cfgdetail::require_number;
    const std::string type = cfgdetail::require_string(j, "type", path);
    AngularMeasure m;
    if (type == "uniform") {
        m = AngularMeasure::uniform();
    } else if (type == "atom") {
        m = AngularMeasure::atom(require_number(j, "theta", path));
    } else if (type == "atom_mixture") {
        const json& atoms = require_field(j, "atoms", path);
        if (!atoms.is_array() || atoms.empty())
            throw ConfigError(path + ".atoms: expected a non-empty array");
        std::vector<std::pair<double, double>> list;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string apath = path + ".atoms[" + std::to_string(i) + "]";
            list.emplace_back(require_number(atoms[i], "theta", apath),
                              require_number(atoms[i], "w", apath));
        }
        m = AngularMeasure::atom_mixture(std::move(list));
    } else if (type == "piecewise_density") {
        const json& bp = require_field(j, "breakpoints", path);
        const json& vals = require_field(j, "values", path);
        if (!bp.is_array() || !vals.is_array())
            throw ConfigError(path + ": breakpoints and values must be arrays");
        m = AngularMeasure::piecewise_density(bp.get<std::vector<double>>(),
                                              vals.get<std::vector<double>>());
    } else {
        throw ConfigError(path + ".type: unknown angular measure '" + type + "'");
    }
    m.rotation = cfgdetail::optional_number(j, "rotation", 0.0, path);
    return m;
}

inline json angular_measure_to_json(const AngularMeasure& m) {
    json j;
    switch (m.kind) {
        case AngularMeasure::Kind::Uniform:
            j["type"] = "uniform";
            break;
        case AngularMeasure::Kind::Atom:
            j["type"] = "atom";
            j["theta"] = m.atom_theta;
            break;
        case AngularMeasure::Kind::AtomMixture: {
            j["type"] = "atom_mixture";
            json atoms = json::array();
            for (const auto& [t, w] : m.atoms) atoms.push_back({{"theta", t}, {"w", w}});
            j["atoms"] = atoms;
            break;
        }
        case AngularMeasure::Kind::PiecewiseDensity:
            j["type"] = "piecewise_density";
            j["breakpoints"] = m.breakpoints;
            j["values"] = m.values;
            break;
    }
    if (m.rotation != 0.0) j["rotation"] = m.rotation;
    return j;
}

// ---- extension specs ----

inline ExtensionSpec extension_from_json(const json& j, const std::string& path) {
    using namespace cfgdetail;
    const std::string kind = require_string(j, "kind", path);
    if (kind == "absorbed") return ExtensionSpec::absorbed();
    if (kind == "cone" || kind == "entrance_only") {
        const double a = optional_number(j, "a", 0.5, path);
        AngularMeasure mp = AngularMeasure::uniform();
        AngularMeasure mm = AngularMeasure::uniform();
        if (j.contains("mu_plus")) mp = angular_measure_from_json(j.at("mu_plus"), path + ".mu_plus");
        if (j.contains("mu_minus"))
            mm = angular_measure_from_json(j.at("mu_minus"), path + ".mu_minus");
        if (kind == "entrance_only") return ExtensionSpec::entrance_only(a, mp, mm);
        double gamma = 0.0;
        if (j.contains("gamma")) {
            const json& g = j.at("gamma");
            if (g.is_string() && (g.get<std::string>() == "inf" || g.get<std::string>() == "infinity"))
                gamma = std::numeric_limits<double>::infinity();
            else if (g.is_number())
                gamma = g.get<double>();
            else
                throw ConfigError(path + ".gamma: expected a number or \"inf\"");
        }
        return ExtensionSpec::cone(gamma, a, mp, mm);
    }
    if (kind == "cylinder_symmetric") return ExtensionSpec::cylinder_symmetric();
    if (kind == "cylinder_neumann") return ExtensionSpec::cylinder_neumann();
    if (kind == "cylinder_nonlocal") {
        const json& arcs = require_field(j, "arcs", path);
        if (!arcs.is_array() || arcs.empty())
            throw ConfigError(path + ".arcs: expected a non-empty array of [lo, hi] pairs");
        std::vector<std::pair<double, double>> list;
        for (std::size_t i = 0; i < arcs.size(); ++i) {
            if (!arcs[i].is_array() || arcs[i].size() != 2)
                throw ConfigError(path + ".arcs[" + std::to_string(i) + "]: expected [lo, hi]");
            list.emplace_back(arcs[i][0].get<double>(), arcs[i][1].get<double>());
        }
        return ExtensionSpec::cylinder_nonlocal(ArcSet::from_arcs(list));
    }
    throw ConfigError(path + ".kind: unknown extension kind '" + kind + "'");
}

inline json extension_to_json(const ExtensionSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    switch (s.kind) {
        case ExtensionSpec::Kind::Cone:
            if (std::isinf(s.gamma))
                j["gamma"] = "inf";
            else
                j["gamma"] = s.gamma;
            [[fallthrough]];
        case ExtensionSpec::Kind::EntranceOnly:
            j["a"] = s.a;
            j["mu_plus"] = angular_measure_to_json(s.mu_plus);
            j["mu_minus"] = angular_measure_to_json(s.mu_minus);
            break;
        case ExtensionSpec::Kind::CylinderNonLocal: {
            json arcs = json::array();
            for (const auto& [lo, hi] : s.nonlocal_set.arcs) arcs.push_back({lo, hi});
            j["arcs"] = arcs;
            break;
        }
        default:
            break;
    }
    return j;
}

// ---- test functions ----

inline TestFunction test_function_from_json(const json& j, const std::string& path) {
    TestFunction f;
    if (!j.is_object() || !j.contains("terms") || !j.at("terms").is_array())
        throw ConfigError(path + ": expected an object with a 'terms' array");
    const json& terms = j.at("terms");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tpath = path + ".terms[" + std::to_string(i) + "]";
        const json& tj = terms[i];
        TestFunction::Term t;
        t.lo = cfgdetail::optional_number(tj, "lo", -std::numeric_limits<double>::infinity(), tpath);
        t.hi = cfgdetail::optional_number(tj, "hi", std::numeric_limits<double>::infinity(), tpath);
        const json& poly = cfgdetail::require_field(tj, "poly", tpath);
        if (!poly.is_array() || poly.empty())
            throw ConfigError(tpath + ".poly: expected a non-empty coefficient array");
        t.poly = poly.get<std::vector<double>>();
        if (tj.contains("harmonic")) {
            const json& hj = tj.at("harmonic");
            const std::string hk = cfgdetail::require_string(hj, "kind", tpath + ".harmonic");
            if (hk == "one")
                t.h = {TestFunction::Harmonic::Kind::One, 0};
            else if (hk == "cos")
                t.h = {TestFunction::Harmonic::Kind::Cos,
                       static_cast<int>(cfgdetail::require_number(hj, "k", tpath + ".harmonic"))};
            else if (hk == "sin")
                t.h = {TestFunction::Harmonic::Kind::Sin,
                       static_cast<int>(cfgdetail::require_number(hj, "k", tpath + ".harmonic"))};
            else
                throw ConfigError(tpath + ".harmonic.kind: expected one|cos|sin");
        }
        f.terms.push_back(std::move(t));
    }
    f.validate();
    return f;
}

inline json test_function_to_json(const TestFunction& f) {
    json terms = json::array();
    for (const auto& t : f.terms) {
        json tj;
        if (!std::isinf(t.lo)) tj["lo"] = t.lo;
        if (!std::isinf(t.hi)) tj["hi"] = t.hi;
        tj["poly"] = t.poly;
        if (t.h.kind != TestFunction::Harmonic::Kind::One) {
            tj["harmonic"] = {
                {"kind", t.h.kind == TestFunction::Harmonic::Kind::Cos ? "cos" : "sin"},
                {"k", t.h.k}};
        }
        terms.push_back(tj);
    }
    return json{{"terms", terms}};
}

// ---- whole experiment configs ----

struct ExperimentSpec {
    std::string name = "simulate";
    double y = 1.0;                       // hitting
    TestFunction f, g;                    // semigroup / averaging_pair
    SurfacePoint start{0.0, 0.0};         // where paths begin
    double t = 1.0;                       // semigroup / averaging_pair observation time
    double z0 = 1.0;                      // absorption_cdf
    std::vector<double> times;            // absorption_cdf

    bool operator==(const ExperimentSpec&) const = default;
};

struct OutputSpec {
    std::string csv_dir = "paths";
    std::string json_path;  // empty: write the record to stdout

    bool operator==(const OutputSpec&) const = default;
};

struct ExperimentConfig {
    double alpha = -0.5;
    ExtensionSpec extension = ExtensionSpec::cone_symmetric();
    SimConfig sim;
    long long n_paths = 1000;
    std::uint64_t seed = 1;
    ExperimentSpec experiment;
    OutputSpec output;

    bool operator==(const ExperimentConfig&) const = default;

    AlphaGeometry geometry() const { return AlphaGeometry::make(alpha); }

    /// Full semantic validation; throws ConfigError naming the field.
    void validate() const {
        const AlphaGeometry geom = geometry();
        extension.validate_for(geom);
        sim.validate();
        if (n_paths <= 0) throw ConfigError("n_paths: must be positive");
        const std::string& n = experiment.name;
        if (n != "simulate" && n != "hitting" && n != "occupation" && n != "semigroup" &&
            n != "averaging_pair" && n != "sign_stats" && n != "theta_qv" &&
            n != "absorption_cdf")
            throw ConfigError("experiment.name: unknown experiment '" + n + "'");
        if (n == "hitting" && !(experiment.y > 0.0))
            throw ConfigError("experiment.y: must be positive");
        if (n == "semigroup" || n == "averaging_pair") {
            experiment.f.validate();
            if (!(experiment.t > 0.0)) throw ConfigError("experiment.t: must be positive");
        }
        if (n == "averaging_pair") experiment.g.validate();
        if (n == "absorption_cdf" && experiment.times.empty())
            throw ConfigError("experiment.times: must list at least one time");
    }
};

inline ExperimentConfig config_from_json(const json& j) {
    using namespace cfgdetail;
    ExperimentConfig c;
    c.alpha = require_number(j, "alpha", "config");
    c.extension = extension_from_json(require_field(j, "extension", "config"), "extension");
    const json& sim = require_field(j, "sim", "config");
    c.sim.epsilon_shell = require_number(sim, "epsilon_shell", "sim");
    c.sim.dt_max = require_number(sim, "dt_max", "sim");
    c.sim.horizon = require_number(sim, "horizon", "sim");
    if (sim.contains("wall") && !sim.at("wall").is_null())
        c.sim.wall = require_number(sim, "wall", "sim");
    c.sim.record_stride =
        static_cast<long>(optional_number(sim, "record_stride", 1.0, "sim"));
    c.sim.dt_rel = optional_number(sim, "dt_rel", c.sim.dt_rel, "sim");
    c.sim.hit_resolution = optional_number(sim, "hit_resolution", c.sim.hit_resolution, "sim");
    c.sim.theta_var_mult = optional_number(sim, "theta_var_mult", c.sim.theta_var_mult, "sim");
    c.n_paths = static_cast<long long>(require_number(j, "n_paths", "config"));
    const json& seed = require_field(j, "seed", "config");
    if (!seed.is_number_integer() && !seed.is_number_unsigned())
        throw ConfigError("config.seed: expected an integer");
    c.seed = seed.get<std::uint64_t>();
    const json& ex = require_field(j, "experiment", "config");
    c.experiment.name = require_string(ex, "name", "experiment");
    if (ex.contains("y")) c.experiment.y = require_number(ex, "y", "experiment");
    if (ex.contains("t")) c.experiment.t = require_number(ex, "t", "experiment");
    if (ex.contains("z0")) c.experiment.z0 = require_number(ex, "z0", "experiment");
    if (ex.contains("times")) {
        if (!ex.at("times").is_array())
            throw ConfigError("experiment.times: expected an array of numbers");
        c.experiment.times = ex.at("times").get<std::vector<double>>();
    }
    if (ex.contains("start")) {
        const json& st = ex.at("start");
        if (!st.is_array() || st.size() != 2)
            throw ConfigError("experiment.start: expected [x, theta]");
        c.experiment.start = SurfacePoint::make(st[0].get<double>(), st[1].get<double>(),
                                                c.geometry().topology);
    }
    if (ex.contains("f")) c.experiment.f = test_function_from_json(ex.at("f"), "experiment.f");
    if (ex.contains("g")) c.experiment.g = test_function_from_json(ex.at("g"), "experiment.g");
    if (j.contains("output")) {
        const json& out = j.at("output");
        if (out.contains("csv_dir")) c.output.csv_dir = require_string(out, "csv_dir", "output");
        if (out.contains("json")) c.output.json_path = require_string(out, "json", "output");
    }
    c.validate();
    return c;
}

inline json config_to_json(const ExperimentConfig& c) {
    json sim{{"epsilon_shell", c.sim.epsilon_shell},
             {"dt_max", c.sim.dt_max},
             {"horizon", c.sim.horizon},
             {"record_stride", c.sim.record_stride},
             {"dt_rel", c.sim.dt_rel},
             {"hit_resolution", c.sim.hit_resolution},
             {"theta_var_mult", c.sim.theta_var_mult}};
    if (c.sim.wall) sim["wall"] = *c.sim.wall;
    json ex{{"name", c.experiment.name}};
    const std::string& n = c.experiment.name;
    if (n == "hitting") ex["y"] = c.experiment.y;
    if (n == "semigroup" || n == "averaging_pair") {
        ex["f"] = test_function_to_json(c.experiment.f);
        ex["t"] = c.experiment.t;
    }
    if (n == "averaging_pair") ex["g"] = test_function_to_json(c.experiment.g);
    if (n == "absorption_cdf") {
        ex["z0"] = c.experiment.z0;
        ex["times"] = c.experiment.times;
    }
    ex["start"] = {c.experiment.start.x, c.experiment.start.theta};
    json out{{"csv_dir", c.output.csv_dir}};
    if (!c.output.json_path.empty()) out["json"] = c.output.json_path;
    return json{{"alpha", c.alpha},
                {"extension", extension_to_json(c.extension)},
                {"sim", sim},
                {"n_paths", c.n_paths},
                {"seed", c.seed},
                {"experiment", ex},
                {"output", out}};
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    return config_from_json(j);
}

}  // namespace grushin
