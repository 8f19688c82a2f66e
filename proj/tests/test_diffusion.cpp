#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "grushin/estimators.hpp"
#include "grushin/mc.hpp"
#include "grushin/simulate.hpp"
#include "grushin/stats_util.hpp"

using namespace grushin;

namespace {
SimConfig base_config() {
    SimConfig cfg;
    cfg.epsilon_shell = 0.05;
    cfg.dt_max = 0.01;
    cfg.horizon = 10.0;
    cfg.hit_resolution = 0.03;
    cfg.record_stride = 0;
    return cfg;
}
}  // namespace

TEST_CASE("flat cylinder step has exact normal marginals") {
    // alpha = 0: both coordinates are standard Brownian over one step
    const auto geom = AlphaGeometry::make(0.0);
    Rng rng(21, 0);
    const double dt = 0.01;
    const std::size_t n = 100000;
    std::vector<double> dxs(n), dths(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = step_interior(geom, 1.0, 0.0, dt, rng);
        REQUIRE_FALSE(s.hit_z);
        dxs[i] = s.x - 1.0;
        double dth = s.theta;
        if (dth > std::numbers::pi) dth -= kTwoPi;
        dths[i] = dth;
    }
    const double sd = std::sqrt(dt);
    auto cdf = [sd](double u) { return normal_cdf(u / sd); };
    CHECK(ks_statistic(dxs, cdf) < ks_critical(n));
    CHECK(ks_statistic(dths, cdf) < ks_critical(n));
}

TEST_CASE("interior step keeps the squared-Bessel mean identity") {
    const auto geom = AlphaGeometry::make(-0.5);
    Rng rng(22, 0);
    const double dt = 0.01;
    MCResult m;
    for (int i = 0; i < 400000; ++i) {
        const auto s = step_interior(geom, 1.0, 0.0, dt, rng);
        m.add(s.x * s.x);
    }
    CHECK(std::fabs(z_score(m, 1.0 + geom.bessel_dim * dt)) < kZThreshold);
}

TEST_CASE("interior step errors") {
    const auto geom = AlphaGeometry::make(-0.5);
    Rng rng(23, 0);
    CHECK_THROWS_AS(step_interior(geom, 0.0, 0.0, 0.01, rng), std::logic_error);
    CHECK_THROWS_AS(step_interior(geom, 1.0, 0.0, 0.0, rng), std::domain_error);
}

TEST_CASE("excursion fragments keep one sign and scale like the shell width") {
    const auto geom = AlphaGeometry::make(-0.5);
    const ExtensionSpec spec = ExtensionSpec::cone_symmetric();
    SimConfig cfg = base_config();
    cfg.wall = 1.0;
    cfg.horizon = 1e4;
    cfg.record_stride = 5;

    Rng rng(24, 0);
    MCResult dur;
    for (int i = 0; i < 1500; ++i) {
        const Trajectory tr = run_excursion(geom, spec, +1, 1.0, cfg, rng);
        dur.add(tr.stats.final_t);
        for (const auto& s : tr.samples) CHECK(s.x >= 0.0);
        REQUIRE_FALSE(tr.samples.empty());
        CHECK(tr.samples.front().x == Catch::Approx(cfg.epsilon_shell));
    }
    CHECK(std::isfinite(dur.mean));

    SimConfig half = cfg;
    half.epsilon_shell = 0.5 * cfg.epsilon_shell;
    Rng rng2(25, 0);
    MCResult dur_half;
    for (int i = 0; i < 1500; ++i)
        dur_half.add(run_excursion(geom, spec, -1, 0.0, half, rng2).stats.final_t);
    // mean duration scales like s(eps) ~ eps^(1+alpha) up to an O(eps^2) term
    const double want_ratio = std::pow(0.5, 1.0 + geom.alpha);
    const double ratio = dur_half.mean / dur.mean;
    const double se = ratio * std::sqrt(std::pow(dur.stderror() / dur.mean, 2) +
                                        std::pow(dur_half.stderror() / dur_half.mean, 2));
    CHECK(std::fabs(ratio - want_ratio) < std::max(4.0 * se, 0.02));
}

TEST_CASE("boundary dispatch statistics") {
    const auto geom = AlphaGeometry::make(-0.5);
    Rng rng(26, 0);
    // sign frequency a, zero holds at gamma = 0
    const ExtensionSpec spec = ExtensionSpec::cone(0.0, 0.7);
    MCResult signs;
    for (int i = 0; i < 100000; ++i) {
        const auto d = boundary_dispatch(geom, spec, 0.05, rng);
        REQUIRE_FALSE(d.absorb);
        CHECK(d.hold_duration == 0.0);
        signs.add(d.sign > 0 ? 1.0 : 0.0);
    }
    CHECK(std::fabs(z_score(signs, 0.7)) < kZThreshold);

    // sticky holds are exponential with the documented mean
    const ExtensionSpec sticky = ExtensionSpec::cone(2.0, 0.5);
    MCResult holds;
    for (int i = 0; i < 100000; ++i)
        holds.add(boundary_dispatch(geom, sticky, 0.05, rng).hold_duration);
    CHECK(std::fabs(z_score(holds, sticky_hold_mean(-0.5, 0.5, 2.0, 0.05))) < kZThreshold);

    // absorbed and degenerate gamma = infinity
    CHECK(boundary_dispatch(geom, ExtensionSpec::cone(
                                      std::numeric_limits<double>::infinity(), 0.5),
                            0.05, rng)
              .absorb);
    CHECK(boundary_dispatch(AlphaGeometry::make(1.5), ExtensionSpec::absorbed(), 0.05, rng)
              .absorb);
    CHECK_THROWS_AS(
        boundary_dispatch(AlphaGeometry::make(0.5), ExtensionSpec::cylinder_symmetric(), 0.05,
                          rng),
        std::logic_error);
}

TEST_CASE("cylinder boundary rules") {
    Rng rng(27, 0);
    const ExtensionSpec neumann = ExtensionSpec::cylinder_neumann();
    for (int s : {-1, +1})
        for (double th : {0.1, 3.0, 6.0})
            CHECK(cylinder_boundary_rule(neumann, th, s, rng) == s);

    const ExtensionSpec sym = ExtensionSpec::cylinder_symmetric();
    MCResult freq;
    for (int i = 0; i < 100000; ++i)
        freq.add(cylinder_boundary_rule(sym, 0.0, +1, rng) > 0 ? 1.0 : 0.0);
    CHECK(std::fabs(z_score(freq, 0.5)) < kZThreshold);

    const ExtensionSpec nl =
        ExtensionSpec::cylinder_nonlocal(ArcSet::from_arcs({{0.0, std::numbers::pi}}));
    CHECK(cylinder_boundary_rule(nl, 1.0, -1, rng) == +1);
    CHECK(cylinder_boundary_rule(nl, 4.0, +1, rng) == -1);
    CHECK_THROWS_AS(cylinder_boundary_rule(ExtensionSpec::cone_symmetric(), 0.0, 1, rng),
                    std::logic_error);
}

TEST_CASE("paths are a deterministic function of the seed") {
    const auto geom = AlphaGeometry::make(-0.5);
    const ExtensionSpec spec = ExtensionSpec::cone(1.0, 0.4);
    SimConfig cfg = base_config();
    cfg.horizon = 3.0;
    cfg.record_stride = 10;
    const auto start = SurfacePoint::make(0.3, 1.0, geom.topology);
    const Trajectory a = simulate_path(geom, spec, cfg, start, 99, 5);
    const Trajectory b = simulate_path(geom, spec, cfg, start, 99, 5);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].t == b.samples[i].t);
        CHECK(a.samples[i].x == b.samples[i].x);
        CHECK(a.samples[i].theta == b.samples[i].theta);
    }
    REQUIRE(a.events.size() == b.events.size());
    const Trajectory c = simulate_path(geom, spec, cfg, start, 99, 6);
    CHECK(a.stats.n_steps != c.stats.n_steps);
}

TEST_CASE("trajectory event and sample invariants") {
    const auto geom = AlphaGeometry::make(-0.5);
    const ExtensionSpec spec = ExtensionSpec::cone(0.5, 0.5);
    SimConfig cfg = base_config();
    cfg.horizon = 5.0;
    cfg.record_stride = 3;
    const Trajectory tr =
        simulate_path(geom, spec, cfg, SurfacePoint::make(0.2, 0.0, geom.topology), 123, 0);

    for (std::size_t i = 1; i < tr.samples.size(); ++i)
        CHECK(tr.samples[i].t > tr.samples[i - 1].t);
    for (std::size_t i = 1; i < tr.events.size(); ++i)
        CHECK(tr.events[i].t >= tr.events[i - 1].t);

    // every excursion start is preceded by a hit of Z (or starts the path)
    bool seen_hit = false;
    for (const auto& e : tr.events) {
        if (e.kind == EventKind::HitZ) seen_hit = true;
        if (e.kind == EventKind::ExcursionStart) CHECK((seen_hit || e.t == 0.0));
    }
    CHECK(tr.stats.n_hit_z > 0);
    CHECK(tr.stats.time_at_z > 0.0);  // gamma > 0 holds
}

TEST_CASE("absorbed paths stay at Z") {
    const auto geom = AlphaGeometry::make(1.5);
    SimConfig cfg = base_config();
    cfg.horizon = 50.0;
    cfg.dt_max = 0.05;
    cfg.record_stride = 20;
    long absorbed = 0;
    for (int i = 0; i < 200; ++i) {
        const Trajectory tr = simulate_path(geom, ExtensionSpec::absorbed(), cfg,
                                            SurfacePoint::make(1.0, 0.0, geom.topology), 7, i);
        if (tr.stats.absorbed) {
            ++absorbed;
            for (const auto& s : tr.samples)
                if (s.t > tr.stats.absorbed_at) CHECK(s.x == 0.0);
            CHECK(tr.stats.time_at_z == Catch::Approx(cfg.horizon - tr.stats.absorbed_at));
        }
    }
    // exit boundary: T0 is a.s. finite, and horizon 50 from x=1 is ample
    CHECK(absorbed == 200);
}

TEST_CASE("entrance regime never returns") {
    const auto geom = AlphaGeometry::make(-2.0);
    const ExtensionSpec spec = ExtensionSpec::entrance_only(0.5);
    SimConfig cfg = base_config();
    cfg.horizon = 20.0;
    cfg.dt_max = 0.5;
    for (int i = 0; i < 300; ++i) {
        const Trajectory tr =
            simulate_path(geom, spec, cfg, SurfacePoint::make(0.0, 0.0, geom.topology), 31, i);
        CHECK(tr.stats.n_hit_z == 0);
        CHECK(tr.stats.n_pos + tr.stats.n_neg == 1);
        // the path may dip low (Bessel of dimension 3 has no positive floor)
        // but never collapses onto Z
        CHECK(tr.stats.min_absx_after_entry > 0.0);
    }
}

TEST_CASE("cylinder sign rules along full paths") {
    const auto geom = AlphaGeometry::make(0.5);
    SimConfig cfg = base_config();
    cfg.horizon = 2.0;
    cfg.record_stride = 5;
    const auto start = SurfacePoint::make(0.2, 0.0, geom.topology);

    long touches = 0;
    for (int i = 0; i < 50; ++i) {
        const Trajectory tr =
            simulate_path(geom, ExtensionSpec::cylinder_neumann(), cfg, start, 41, i);
        CHECK(tr.stats.n_sign_changes == 0);
        touches += tr.stats.n_hit_z;
        for (const auto& s : tr.samples) CHECK(s.x >= 0.0);
    }
    CHECK(touches > 0);  // the rule was actually exercised

    bool pos = false, neg = false;
    for (int i = 0; i < 20 && !(pos && neg); ++i) {
        const Trajectory tr =
            simulate_path(geom, ExtensionSpec::cylinder_symmetric(), cfg, start, 42, i);
        for (const auto& s : tr.samples) {
            pos = pos || s.x > 0.0;
            neg = neg || s.x < 0.0;
        }
    }
    CHECK(pos);
    CHECK(neg);

    const ExtensionSpec nl =
        ExtensionSpec::cylinder_nonlocal(ArcSet::from_arcs({{0.0, std::numbers::pi}}));
    for (int i = 0; i < 20; ++i) {
        const Trajectory tr = simulate_path(geom, nl, cfg, start, 43, i);
        for (const auto& e : tr.events)
            if (e.kind == EventKind::ExcursionStart && e.sign > 0)
                CHECK(nl.nonlocal_set.contains(e.theta));
    }
}

TEST_CASE("grushin cylinder absorption matches the BESQ0 law") {
    const auto geom = AlphaGeometry::make(1.0);
    SimConfig cfg = base_config();
    cfg.horizon = 0.5;
    cfg.dt_max = 0.05;
    MCResult m;
    EngineOptions opts;
    opts.collect_samples = false;
    opts.collect_events = false;
    for (int i = 0; i < 40000; ++i) {
        Rng rng(51, i);
        const RunResult r = run_path(geom, ExtensionSpec::absorbed(), cfg, opts,
                                     SurfacePoint::make(1.0, 0.0, geom.topology), rng);
        m.add(r.traj.stats.absorbed ? 1.0 : 0.0);
    }
    CHECK(std::fabs(z_score(m, besq0_absorption_prob(1.0, 0.5))) < kZThreshold);
}

TEST_CASE("one-sided hitting matches the scale-function ratio") {
    // Bessel path from x=1 in (0.5, 2): scale ratio, cross-checked by the
    // interior stepper with steps refined near both levels
    const auto geom = AlphaGeometry::make(-0.5);
    Rng rng(52, 0);
    const double want = (1.0 - std::sqrt(0.5)) / (std::sqrt(2.0) - std::sqrt(0.5));
    MCResult m;
    SimConfig cfg = base_config();
    for (int i = 0; i < 30000; ++i) {
        double x = 1.0, theta = 0.0;
        for (;;) {
            const double gap = std::min(x - 0.5, 2.0 - x);
            const double dt = std::clamp(0.2 * gap * gap, 1e-7, 0.01);
            const auto s = step_interior(geom, x, theta, dt, rng, cfg);
            x = s.x;
            theta = s.theta;
            if (x >= 2.0 - 1e-4) {
                m.add(1.0);
                break;
            }
            if (x <= 0.5 + 1e-4) {
                m.add(0.0);
                break;
            }
        }
    }
    CHECK(std::fabs(z_score(m, want)) < kZThreshold);
}

TEST_CASE("exit angle settles: dyadic theta gaps shrink toward T0") {
    const auto geom = AlphaGeometry::make(-0.5);
    const ExtensionSpec spec = ExtensionSpec::cone_symmetric();
    SimConfig cfg = base_config();
    cfg.dt_max = 2e-3;
    cfg.horizon = 1e3;
    cfg.wall = 2.0;  // keeps T0 integrable; hitting times are heavy-tailed otherwise
    cfg.record_stride = 1;
    EngineOptions opts;
    opts.stop_at_first_hit_z = true;
    const int kLevels = 9;
    std::vector<std::vector<double>> gaps(kLevels);
    for (int i = 0; i < 250; ++i) {
        Rng rng(53, i);
        const RunResult r = run_path(geom, spec, cfg, opts,
                                     SurfacePoint::make(0.5, 0.0, geom.topology), rng);
        const double t0 = r.traj.stats.first_hit_z;
        REQUIRE(std::isfinite(t0));
        const auto& ss = r.traj.samples;
        auto theta_at = [&](double t) {
            auto it = std::upper_bound(ss.begin(), ss.end(), t,
                                       [](double v, const Sample& s) { return v < s.t; });
            return it == ss.begin() ? ss.front().theta : std::prev(it)->theta;
        };
        for (int k = 1; k <= kLevels; ++k) {
            const double t1 = t0 * (1.0 - std::pow(2.0, -k));
            const double t2 = t0 * (1.0 - std::pow(2.0, -(k + 1)));
            double d = std::fabs(theta_at(t2) - theta_at(t1));
            if (d > std::numbers::pi) d = kTwoPi - d;
            gaps[k - 1].push_back(d);
        }
    }
    std::vector<double> med(kLevels);
    for (int k = 0; k < kLevels; ++k) {
        auto& g = gaps[k];
        std::nth_element(g.begin(), g.begin() + g.size() / 2, g.end());
        med[k] = g[g.size() / 2];
    }
    // successive gaps shrink: median at depth 8 well below depth 1
    CHECK(med[kLevels - 1] < 0.35 * med[0]);
    CHECK(med[kLevels - 1] < med[1]);
    CHECK(med[kLevels - 2] < med[0]);
}

TEST_CASE("wall reflection keeps paths inside and is recorded") {
    const auto geom = AlphaGeometry::make(-0.5);
    const ExtensionSpec spec = ExtensionSpec::cone_symmetric();
    SimConfig cfg = base_config();
    cfg.wall = 0.5;
    cfg.horizon = 5.0;
    cfg.record_stride = 1;
    const Trajectory tr =
        simulate_path(geom, spec, cfg, SurfacePoint::make(0.3, 0.0, geom.topology), 54, 0);
    CHECK(tr.stats.n_wall > 0);
    for (const auto& s : tr.samples) CHECK(std::fabs(s.x) <= 0.5 + 1e-12);
    bool has_wall_event = false;
    for (const auto& e : tr.events) has_wall_event |= e.kind == EventKind::WallReflect;
    CHECK(has_wall_event);
}

TEST_CASE("start must respect the wall") {
    const auto geom = AlphaGeometry::make(-0.5);
    SimConfig cfg = base_config();
    cfg.wall = 0.5;
    CHECK_THROWS_AS(simulate_path(geom, ExtensionSpec::cone_symmetric(), cfg,
                                  SurfacePoint::make(0.7, 0.0, geom.topology), 1, 0),
                    ConfigError);
}

TEST_CASE("incompatible extension and geometry are rejected") {
    SimConfig cfg = base_config();
    CHECK_THROWS_AS(simulate_path(AlphaGeometry::make(0.5), ExtensionSpec::cone_symmetric(),
                                  cfg, SurfacePoint{0.5, 0.0}, 1, 0),
                    ConfigError);
    CHECK_THROWS_AS(simulate_path(AlphaGeometry::make(-0.5),
                                  ExtensionSpec::cylinder_symmetric(), cfg,
                                  SurfacePoint{0.5, 0.0}, 1, 0),
                    ConfigError);
    CHECK_THROWS_AS(simulate_path(AlphaGeometry::make(-2.0), ExtensionSpec::cone_symmetric(),
                                  cfg, SurfacePoint{0.5, 0.0}, 1, 0),
                    ConfigError);
}
