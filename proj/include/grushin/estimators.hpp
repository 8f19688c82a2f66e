#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "grushin/errors.hpp"
#include "grushin/extension.hpp"
#include "grushin/geometry.hpp"
#include "grushin/mc.hpp"
#include "grushin/simulate.hpp"
#include "grushin/test_function.hpp"
#include "grushin/trajectory.hpp"

namespace grushin {

/// Fraction of paths started on Z that reach +y before -y.
inline MCResult estimate_hitting(const AlphaGeometry& geom, const ExtensionSpec& spec,
                                 const SimConfig& cfg, double y, long long n,
                                 std::uint64_t seed, int threads = 0) {
    if (geom.boundary_class != BoundaryClass::Regular)
        throw ConfigError("estimate_hitting: requires the regular regime (-1 < alpha < 1)");
    if (!(y > cfg.epsilon_shell))
        throw ConfigError("estimate_hitting: y must exceed sim.epsilon_shell");
    SimConfig run_cfg = cfg;
    run_cfg.record_stride = 0;
    run_cfg.wall.reset();
    EngineOptions opts;
    opts.stop_level = y;
    opts.collect_samples = false;
    opts.collect_events = false;
    const SurfacePoint start = SurfacePoint::make(0.0, 0.0, geom.topology);
    long long censored = 0;
    struct Acc {
        MCResult r;
        long long censored = 0;
        void merge(const Acc& o) {
            r = MCResult::merge(r, o.r);
            censored += o.censored;
        }
    };
    Acc acc = run_parallel<Acc>(n, seed, threads, [&](Acc& a, long long, Rng& rng) {
        RunResult res = run_path(geom, spec, run_cfg, opts, start, rng);
        if (!res.traj.stats.stopped_at_level) {
            a.censored++;
            return;
        }
        a.r.add(res.traj.stats.stop_side > 0 ? 1.0 : 0.0);
    });
    censored = acc.censored;
    if (censored > 0)
        throw ConfigError("estimate_hitting: paths censored by the horizon; raise sim.horizon");
    return acc.r;
}

/// Long-run fraction of time at Z, per path over [0, horizon]. Requires
/// reflecting walls (otherwise the occupation fraction is not well-defined)
/// and a cone-family extension.
inline MCResult estimate_occupation_fraction(const AlphaGeometry& geom,
                                             const ExtensionSpec& spec, const SimConfig& cfg,
                                             long long n_paths, std::uint64_t seed,
                                             int threads = 0, double hold_mean_scale = 1.0) {
    if (!cfg.wall)
        throw ConfigError("estimate_occupation_fraction: requires sim.wall");
    if (spec.is_cylinder_kind())
        throw ConfigError("estimate_occupation_fraction: requires a cone-family extension");
    SimConfig run_cfg = cfg;
    run_cfg.record_stride = 0;
    EngineOptions opts;
    opts.collect_samples = false;
    opts.collect_events = false;
    opts.hold_mean_scale = hold_mean_scale;
    const SurfacePoint start = SurfacePoint::make(0.0, 0.0, geom.topology);
    MeanAcc acc = run_parallel<MeanAcc>(n_paths, seed, threads, [&](MeanAcc& a, long long, Rng& rng) {
        RunResult res = run_path(geom, spec, run_cfg, opts, start, rng);
        a.add(res.traj.stats.time_at_z / cfg.horizon);
    });
    return acc.result;
}

/// Monte Carlo value of the semigroup: mean of f at time t, started at start.
inline MCResult estimate_semigroup(const AlphaGeometry& geom, const ExtensionSpec& spec,
                                   const SimConfig& cfg, const TestFunction& f,
                                   SurfacePoint start, double t, long long n,
                                   std::uint64_t seed, int threads = 0) {
    f.validate();
    if (!(t > 0.0 && t <= cfg.horizon))
        throw ConfigError("estimate_semigroup: need 0 < t <= sim.horizon");
    SimConfig run_cfg = cfg;
    run_cfg.horizon = t;
    run_cfg.record_stride = 0;
    EngineOptions opts;
    opts.checkpoints = {t};
    opts.collect_samples = false;
    opts.collect_events = false;
    MeanAcc acc = run_parallel<MeanAcc>(n, seed, threads, [&](MeanAcc& a, long long, Rng& rng) {
        RunResult res = run_path(geom, spec, run_cfg, opts, start, rng);
        const Sample& s = res.at_checkpoints.at(0);
        a.add(f.eval(s.x, s.theta, geom.topology));
    });
    return acc.result;
}

struct PairCheckResult {
    MCResult f;
    MCResult g;
    MCResult diff;  // paired f - g (common random numbers)
    double z = 0.0;
};

/// Paired comparison of P_t f and P_t g under common random numbers, for a
/// pair (f, g) that agrees on M+ and has matching circle averages on M-.
/// The matching precondition is checked symbolically and violations are
/// rejected.
inline PairCheckResult averaging_pair_check(const AlphaGeometry& geom,
                                            const ExtensionSpec& spec, const SimConfig& cfg,
                                            const TestFunction& f, const TestFunction& g,
                                            SurfacePoint start, double t, long long n,
                                            std::uint64_t seed, int threads = 0) {
    f.validate();
    g.validate();
    if (!(start.x > 0.0))
        throw ConfigError("averaging_pair_check: start must lie in M+ (x > 0)");
    if (!equal_on_positive_side(f, g))
        throw ConfigError("averaging_pair_check: f and g must agree on {x > 0}");
    if (!theta_averages_match_on_negative(f, g))
        throw ConfigError(
            "averaging_pair_check: theta averages of f and g must match on {x < 0}");
    SimConfig run_cfg = cfg;
    run_cfg.horizon = t;
    run_cfg.record_stride = 0;
    EngineOptions opts;
    opts.checkpoints = {t};
    opts.collect_samples = false;
    opts.collect_events = false;
    struct Acc {
        MCResult rf, rg, rd;
        void merge(const Acc& o) {
            rf = MCResult::merge(rf, o.rf);
            rg = MCResult::merge(rg, o.rg);
            rd = MCResult::merge(rd, o.rd);
        }
    };
    Acc acc = run_parallel<Acc>(n, seed, threads, [&](Acc& a, long long, Rng& rng) {
        RunResult res = run_path(geom, spec, run_cfg, opts, start, rng);
        const Sample& s = res.at_checkpoints.at(0);
        const double vf = f.eval(s.x, s.theta, geom.topology);
        const double vg = g.eval(s.x, s.theta, geom.topology);
        a.rf.add(vf);
        a.rg.add(vg);
        a.rd.add(vf - vg);
    });
    PairCheckResult out{acc.rf, acc.rg, acc.rd, 0.0};
    out.z = z_score(acc.rd, 0.0);
    return out;
}

struct SignStats {
    long long n_pos = 0;
    long long n_neg = 0;
    long long n_sign_changes = 0;
    long long n_pos_theta_outside = 0;  // positive starts with angle outside A (non-local rule)

    void merge(const SignStats& o) {
        n_pos += o.n_pos;
        n_neg += o.n_neg;
        n_sign_changes += o.n_sign_changes;
        n_pos_theta_outside += o.n_pos_theta_outside;
    }

    double positive_fraction() const {
        const long long n = n_pos + n_neg;
        return n > 0 ? static_cast<double>(n_pos) / static_cast<double>(n) : 0.0;
    }
};

/// Counts over the excursion-start events of a batch of trajectories.
inline SignStats excursion_sign_stats(std::span<const Trajectory> trajectories,
                                      const ArcSet* nonlocal_set = nullptr) {
    SignStats s;
    for (const auto& traj : trajectories) {
        int prev = 0;
        for (const auto& e : traj.events) {
            if (e.kind != EventKind::ExcursionStart) continue;
            (e.sign > 0 ? s.n_pos : s.n_neg)++;
            if (prev != 0 && e.sign != prev) s.n_sign_changes++;
            prev = e.sign;
            if (nonlocal_set && e.sign > 0 && !nonlocal_set->contains(e.theta))
                s.n_pos_theta_outside++;
        }
    }
    return s;
}

/// Streamed variant: runs n paths and accumulates the sign statistics.
inline SignStats collect_sign_stats(const AlphaGeometry& geom, const ExtensionSpec& spec,
                                    const SimConfig& cfg, SurfacePoint start, long long n,
                                    std::uint64_t seed, int threads = 0) {
    SimConfig run_cfg = cfg;
    run_cfg.record_stride = 0;
    const ArcSet* set =
        spec.kind == ExtensionSpec::Kind::CylinderNonLocal ? &spec.nonlocal_set : nullptr;
    struct Acc {
        SignStats s;
        void merge(const Acc& o) { s.merge(o.s); }
    };
    EngineOptions opts;
    opts.collect_samples = false;
    Acc acc = run_parallel<Acc>(n, seed, threads, [&](Acc& a, long long, Rng& rng) {
        RunResult res = run_path(geom, spec, run_cfg, opts, start, rng);
        const Trajectory& tr = res.traj;
        a.s.merge(excursion_sign_stats({&tr, 1}, set));
    });
    return acc.s;
}

/// Mean accumulated theta quadratic variation over [0, T0], plus the
/// natural-scale quadratic variation and T0 itself as extras. Paths that do
/// not reach Z by the horizon contribute their [0, horizon] values and are
/// counted in extra["censored_fraction"]; at alpha = 0, where T0 has
/// infinite mean, some censoring is intrinsic.
inline MCResult estimate_theta_qv(const AlphaGeometry& geom, const SimConfig& cfg,
                                  SurfacePoint start, long long n, std::uint64_t seed,
                                  int threads = 0) {
    if (geom.boundary_class != BoundaryClass::Regular)
        throw ConfigError("estimate_theta_qv: requires the regular regime (-1 < alpha < 1)");
    if (start.x == 0.0) throw ConfigError("estimate_theta_qv: start must have x != 0");
    const ExtensionSpec spec = geom.topology == Topology::Cone
                                   ? ExtensionSpec::cone_symmetric()
                                   : ExtensionSpec::cylinder_symmetric();
    SimConfig run_cfg = cfg;
    run_cfg.record_stride = 0;
    EngineOptions opts;
    opts.stop_at_first_hit_z = true;
    opts.collect_samples = false;
    opts.collect_events = false;
    struct Acc {
        MCResult qv_theta, qv_y, t0;
        long long censored = 0;
        void merge(const Acc& o) {
            qv_theta = MCResult::merge(qv_theta, o.qv_theta);
            qv_y = MCResult::merge(qv_y, o.qv_y);
            t0 = MCResult::merge(t0, o.t0);
            censored += o.censored;
        }
    };
    Acc acc = run_parallel<Acc>(n, seed, threads, [&](Acc& a, long long, Rng& rng) {
        RunResult res = run_path(geom, spec, run_cfg, opts, start, rng);
        const PathStats& st = res.traj.stats;
        if (!std::isfinite(st.first_hit_z)) a.censored++;
        a.qv_theta.add(st.qv_theta);
        a.qv_y.add(st.qv_y);
        a.t0.add(std::isfinite(st.first_hit_z) ? st.first_hit_z : st.final_t);
    });
    MCResult out = acc.qv_theta;
    out.extra["qv_y_mean"] = acc.qv_y.mean;
    out.extra["qv_y_stderr"] = acc.qv_y.stderror();
    out.extra["t0_mean"] = acc.t0.mean;
    out.extra["censored_fraction"] =
        static_cast<double>(acc.censored) / static_cast<double>(n);
    return out;
}

/// Empirical P(T0 <= t) at each requested time for the Grushin cylinder
/// (alpha = 1), where the oracle is the 0-dimensional squared-Bessel
/// absorption probability exp(-z0/(2t)).
inline std::vector<MCResult> estimate_absorption_cdf(const AlphaGeometry& geom,
                                                     const SimConfig& cfg, double z0,
                                                     const std::vector<double>& times,
                                                     long long n, std::uint64_t seed,
                                                     int threads = 0) {
    if (geom.alpha != 1.0)
        throw ConfigError("estimate_absorption_cdf: this experiment requires alpha = 1");
    if (!(z0 >= 0.0)) throw ConfigError("estimate_absorption_cdf: z0 must be >= 0");
    for (double t : times)
        if (!(t > 0.0 && t <= cfg.horizon))
            throw ConfigError("estimate_absorption_cdf: times must lie in (0, horizon]");
    const ExtensionSpec spec = ExtensionSpec::absorbed();
    SimConfig run_cfg = cfg;
    run_cfg.record_stride = 0;
    EngineOptions opts;
    opts.checkpoints = times;
    opts.collect_samples = false;
    opts.collect_events = false;
    const SurfacePoint start = SurfacePoint::make(std::sqrt(z0), 0.0, geom.topology);
    struct Acc {
        std::vector<MCResult> at;
        void merge(const Acc& o) {
            if (at.empty()) {
                at = o.at;
                return;
            }
            if (o.at.empty()) return;
            for (std::size_t i = 0; i < at.size(); ++i)
                at[i] = MCResult::merge(at[i], o.at[i]);
        }
    };
    Acc acc = run_parallel<Acc>(n, seed, threads, [&](Acc& a, long long, Rng& rng) {
        if (a.at.empty()) a.at.resize(times.size());
        RunResult res = run_path(geom, spec, run_cfg, opts, start, rng);
        const double t_abs = res.traj.stats.absorbed_at;
        for (std::size_t i = 0; i < times.size(); ++i)
            a.at[i].add(t_abs <= times[i] ? 1.0 : 0.0);
    });
    return acc.at;
}

}  // namespace grushin
