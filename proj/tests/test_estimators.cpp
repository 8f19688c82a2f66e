#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "grushin/estimators.hpp"
#include "grushin/mc.hpp"
#include "grushin/test_function.hpp"

using namespace grushin;

namespace {
SimConfig base_config() {
    SimConfig cfg;
    cfg.epsilon_shell = 0.05;
    cfg.dt_max = 0.02;
    cfg.horizon = 1e3;
    cfg.hit_resolution = 0.03;
    cfg.record_stride = 0;
    return cfg;
}
}  // namespace

TEST_CASE("MCResult merge reproduces pooled statistics exactly") {
    std::vector<double> xs;
    for (int i = 0; i < 777; ++i) xs.push_back(std::cos(0.3 * i) * (1.0 + 0.002 * i));
    const MCResult whole = MCResult::from_sample(xs);
    for (std::size_t cut : {1u, 77u, 400u, 776u}) {
        const MCResult a = MCResult::from_sample(std::span(xs).first(cut));
        const MCResult b = MCResult::from_sample(std::span(xs).subspan(cut));
        const MCResult ab = MCResult::merge(a, b);
        const MCResult ba = MCResult::merge(b, a);
        CHECK(ab.n == whole.n);
        CHECK(ab.mean == Catch::Approx(whole.mean).epsilon(1e-13));
        CHECK(ab.m2 == Catch::Approx(whole.m2).epsilon(1e-11));
        CHECK(ba.mean == Catch::Approx(ab.mean).epsilon(1e-13));  // commutative
        CHECK(ab.stderror() == Catch::Approx(whole.stderror()).epsilon(1e-11));
    }
    // associative on a three-way split
    const MCResult a = MCResult::from_sample(std::span(xs).first(100));
    const MCResult b = MCResult::from_sample(std::span(xs).subspan(100, 300));
    const MCResult c = MCResult::from_sample(std::span(xs).subspan(400));
    const MCResult l = MCResult::merge(MCResult::merge(a, b), c);
    const MCResult r = MCResult::merge(a, MCResult::merge(b, c));
    CHECK(l.mean == Catch::Approx(r.mean).epsilon(1e-13));
    CHECK(l.m2 == Catch::Approx(r.m2).epsilon(1e-11));
    // neutral element
    CHECK(MCResult::merge(MCResult{}, whole).mean == whole.mean);
}

TEST_CASE("stderr definition") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const MCResult r = MCResult::from_sample(xs);
    // sum of squared deviations is 5, so sample sd (n-1) over sqrt(n)
    CHECK(r.stderror() == Catch::Approx(std::sqrt((5.0 / 3.0) / 4.0)));
}

TEST_CASE("symbolic test-function machinery") {
    using H = TestFunction::Harmonic::Kind;
    const TestFunction f = TestFunction::harmonic_on_side(H::Cos, 1, -1);
    const TestFunction zero = TestFunction::zero();
    CHECK(equal_on_positive_side(f, zero));
    CHECK(theta_averages_match_on_negative(f, zero));

    const TestFunction ind_neg = TestFunction::indicator_negative();
    CHECK_FALSE(theta_averages_match_on_negative(ind_neg, zero));
    CHECK_FALSE(equal_on_positive_side(TestFunction::indicator_positive(), zero));

    const TestFunction g = ind_neg + TestFunction::harmonic_on_side(H::Sin, 2, -1);
    CHECK(equal_on_positive_side(ind_neg, g));
    CHECK(theta_averages_match_on_negative(ind_neg, g));

    // evaluation
    CHECK(f.eval(-1.0, 0.0, Topology::Cone) == 1.0);
    CHECK(f.eval(1.0, 0.0, Topology::Cone) == 0.0);
    CHECK(f.eval(0.0, 0.0, Topology::Cone) == 0.0);  // theta mean of cos is 0
    const TestFunction one = TestFunction::indicator_positive() + ind_neg;
    CHECK(one.eval(0.3, 1.0, Topology::Cone) == 1.0);
    CHECK(one.eval(0.0, 1.0, Topology::Cone) == 1.0);

    // rotation pushforward: f_rot(x, theta) = f(x, theta - phi)
    const double phi = 1.234;
    const TestFunction frot = f.rotated(phi);
    for (double th : {0.0, 0.7, 3.0, 5.5})
        CHECK(frot.eval(-1.0, th, Topology::Cone) ==
              Catch::Approx(f.eval(-1.0, th - phi, Topology::Cone)).margin(1e-12));
    // reflection pushforward
    const TestFunction fref = f.reflected();
    CHECK(fref.eval(1.0, 0.5, Topology::Cone) == Catch::Approx(std::cos(0.5)));
    CHECK(fref.eval(-1.0, 0.5, Topology::Cone) == 0.0);

    // unbounded non-constant polynomials are rejected
    TestFunction bad;
    bad.terms.push_back({0.0, std::numeric_limits<double>::infinity(), {0.0, 1.0}, {}});
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("hitting estimator matches the skewness") {
    const auto geom = AlphaGeometry::make(-0.5);
    const SimConfig cfg = base_config();
    const MCResult r =
        estimate_hitting(geom, ExtensionSpec::cone(0.0, 0.3), cfg, 0.5, 20000, 61, 2);
    CHECK(std::fabs(z_score(r, 0.3)) < kZThreshold);
    CHECK_THROWS_AS(
        estimate_hitting(AlphaGeometry::make(1.5), ExtensionSpec::absorbed(), cfg, 0.5, 10, 1, 1),
        ConfigError);
    CHECK_THROWS_AS(estimate_hitting(AlphaGeometry::make(-2.0),
                                     ExtensionSpec::entrance_only(0.5), cfg, 0.5, 10, 1, 1),
                    ConfigError);
}

TEST_CASE("occupation estimator prerequisites and controls") {
    const auto geom = AlphaGeometry::make(-0.5);
    SimConfig cfg = base_config();
    cfg.horizon = 50.0;
    CHECK_THROWS_AS(estimate_occupation_fraction(geom, ExtensionSpec::cone(2.0, 0.5), cfg, 2,
                                                 1, 1),
                    ConfigError);  // no walls
    cfg.wall = 1.0;
    CHECK_THROWS_AS(
        estimate_occupation_fraction(AlphaGeometry::make(0.5),
                                     ExtensionSpec::cylinder_symmetric(), cfg, 2, 1, 1),
        ConfigError);
    const MCResult r0 =
        estimate_occupation_fraction(geom, ExtensionSpec::cone(0.0, 0.5), cfg, 4, 62, 2);
    CHECK(r0.mean == 0.0);  // gamma = 0: no holds at all
    const MCResult r1 =
        estimate_occupation_fraction(geom, ExtensionSpec::cone(2.0, 0.5), cfg, 4, 63, 2);
    CHECK(r1.mean > 0.05);
}

TEST_CASE("corrupting the sticky hold calibration is detectable") {
    // the dev knob behind `paper-suite --dev-kappa-scale`: doubling the hold
    // mean must push the occupation fraction visibly above 3/19
    const auto geom = AlphaGeometry::make(-0.5);
    SimConfig cfg = base_config();
    cfg.horizon = 500.0;
    cfg.wall = 1.0;
    cfg.dt_max = 0.01;
    const ExtensionSpec spec = ExtensionSpec::cone(2.0, 0.5);
    const double oracle = 3.0 / 19.0;
    const MCResult clean = estimate_occupation_fraction(geom, spec, cfg, 6, 91, 2, 1.0);
    const MCResult corrupt = estimate_occupation_fraction(geom, spec, cfg, 6, 91, 2, 2.0);
    CHECK(std::fabs(clean.mean - oracle) < 0.05 * oracle + kZThreshold * clean.stderror());
    CHECK(corrupt.mean > oracle * 1.3);
}

TEST_CASE("semigroup estimator basics") {
    const auto geom = AlphaGeometry::make(-0.5);
    const ExtensionSpec spec = ExtensionSpec::cone_symmetric();
    SimConfig cfg = base_config();
    cfg.dt_max = 5e-3;
    const auto start = SurfacePoint::make(0.5, 0.0, geom.topology);

    // conservative: P_t 1 = 1 exactly
    const TestFunction one =
        TestFunction::indicator_positive() + TestFunction::indicator_negative();
    const MCResult r1 = estimate_semigroup(geom, spec, cfg, one, start, 1.0, 500, 64, 2);
    CHECK(r1.mean == 1.0);
    CHECK(r1.stderror() == 0.0);

    // SO(2) symmetry forces P_t [cos(theta) 1{x<0}] = 0
    using H = TestFunction::Harmonic::Kind;
    const TestFunction f = TestFunction::harmonic_on_side(H::Cos, 1, -1);
    const MCResult r2 = estimate_semigroup(geom, spec, cfg, f, start, 1.0, 20000, 65, 2);
    CHECK(std::fabs(z_score(r2, 0.0)) < kZThreshold);

    // Neumann: nothing crosses, so 1{x<0} stays exactly 0 from x > 0
    const auto cyl = AlphaGeometry::make(0.5);
    const MCResult r3 =
        estimate_semigroup(cyl, ExtensionSpec::cylinder_neumann(), base_config(),
                           TestFunction::indicator_negative(),
                           SurfacePoint::make(0.5, 0.0, cyl.topology), 1.0, 2000, 66, 2);
    CHECK(r3.mean == 0.0);
}

TEST_CASE("averaging pair check uses common random numbers") {
    const auto geom = AlphaGeometry::make(-0.5);
    const ExtensionSpec spec = ExtensionSpec::cone_symmetric();
    SimConfig cfg = base_config();
    const auto start = SurfacePoint::make(0.5, 0.0, geom.topology);
    using H = TestFunction::Harmonic::Kind;
    const TestFunction f = TestFunction::harmonic_on_side(H::Cos, 1, -1);

    // f = g: identically zero difference
    const auto same = averaging_pair_check(geom, spec, cfg, f, f, start, 0.5, 500, 67, 2);
    CHECK(same.z == 0.0);
    CHECK(same.diff.mean == 0.0);

    // the two stated pairs pass
    const auto p1 =
        averaging_pair_check(geom, spec, cfg, f, TestFunction::zero(), start, 0.5, 8000, 68, 2);
    CHECK(std::fabs(p1.z) < kZThreshold);
    const TestFunction ind = TestFunction::indicator_negative();
    const auto p2 = averaging_pair_check(geom, spec, cfg, ind,
                                         ind + TestFunction::harmonic_on_side(H::Sin, 2, -1),
                                         start, 0.5, 8000, 69, 2);
    CHECK(std::fabs(p2.z) < kZThreshold);

    // mismatched pairs are rejected before any simulation
    CHECK_THROWS_AS(averaging_pair_check(geom, spec, cfg, TestFunction::indicator_positive(),
                                         TestFunction::zero(), start, 0.5, 10, 1, 1),
                    ConfigError);
    CHECK_THROWS_AS(averaging_pair_check(geom, spec, cfg, ind, TestFunction::zero(), start,
                                         0.5, 10, 1, 1),
                    ConfigError);
}

TEST_CASE("excursion sign statistics") {
    Trajectory a;
    a.events.push_back({0.0, EventKind::ExcursionStart, +1, 0.0, 1.0});
    a.events.push_back({1.0, EventKind::HitZ, 0, 0.0, 0.0});
    a.events.push_back({1.0, EventKind::ExcursionStart, -1, 0.0, 2.0});
    a.events.push_back({2.0, EventKind::ExcursionStart, -1, 0.0, 4.0});
    Trajectory b;
    b.events.push_back({0.5, EventKind::ExcursionStart, +1, 0.0, 4.0});
    const std::vector<Trajectory> batch{a, b};
    const SignStats s = excursion_sign_stats(batch);
    CHECK(s.n_pos == 2);
    CHECK(s.n_neg == 2);
    CHECK(s.n_sign_changes == 1);

    const ArcSet arc = ArcSet::from_arcs({{0.0, std::numbers::pi}});
    const SignStats t = excursion_sign_stats(batch, &arc);
    CHECK(t.n_pos_theta_outside == 1);  // the start at theta = 4.0
}

TEST_CASE("theta quadratic variation estimator") {
    SimConfig cfg = base_config();
    cfg.dt_max = 2e-3;
    cfg.wall = 3.0;  // unwalled hitting times are heavy-tailed

    // alpha = 0: QV equals elapsed time, so mean QV matches mean T0
    const auto flat = AlphaGeometry::make(0.0);
    const MCResult q0 = estimate_theta_qv(flat, cfg, SurfacePoint{1.0, 0.0}, 1500, 71, 2);
    CHECK(std::fabs(q0.mean - q0.extra.at("t0_mean")) <
          kZThreshold * (q0.stderror() + 1e-3));

    // alpha = 0.5: theta-QV and natural-scale QV agree in mean
    const auto cyl = AlphaGeometry::make(0.5);
    const MCResult q1 = estimate_theta_qv(cyl, cfg, SurfacePoint{1.0, 0.0}, 1500, 72, 2);
    const double qv_y = q1.extra.at("qv_y_mean");
    CHECK(std::fabs(q1.mean - qv_y) / qv_y < 0.01);

    CHECK_THROWS_AS(
        estimate_theta_qv(AlphaGeometry::make(-2.0), cfg, SurfacePoint{1.0, 0.0}, 10, 1, 1),
        ConfigError);
    CHECK_THROWS_AS(estimate_theta_qv(flat, cfg, SurfacePoint{0.0, 0.0}, 10, 1, 1),
                    ConfigError);
}

TEST_CASE("absorption cdf estimator") {
    const auto geom = AlphaGeometry::make(1.0);
    SimConfig cfg = base_config();
    cfg.horizon = 2.0;
    cfg.dt_max = 0.05;
    const std::vector<double> times{0.25, 0.5, 1.0, 2.0};
    const auto rs = estimate_absorption_cdf(geom, cfg, 1.0, times, 20000, 73, 2);
    REQUIRE(rs.size() == times.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(std::fabs(z_score(rs[i], besq0_absorption_prob(1.0, times[i]))) < kZThreshold);
        if (i > 0) CHECK(rs[i].mean >= rs[i - 1].mean);
    }
    CHECK_THROWS_AS(estimate_absorption_cdf(AlphaGeometry::make(1.5), cfg, 1.0, times, 10, 1, 1),
                    ConfigError);
}

TEST_CASE("estimates are bit-identical across worker counts") {
    const auto geom = AlphaGeometry::make(-0.5);
    const SimConfig cfg = base_config();
    const ExtensionSpec spec = ExtensionSpec::cone(0.0, 0.7);
    const MCResult r1 = estimate_hitting(geom, spec, cfg, 0.5, 2000, 74, 1);
    const MCResult r3 = estimate_hitting(geom, spec, cfg, 0.5, 2000, 74, 3);
    CHECK(std::memcmp(&r1.mean, &r3.mean, sizeof(double)) == 0);
    CHECK(std::memcmp(&r1.m2, &r3.m2, sizeof(double)) == 0);
    CHECK(r1.n == r3.n);
}

TEST_CASE("rotation pushforward couples estimates at fixed seed") {
    const auto geom = AlphaGeometry::make(-0.5);
    SimConfig cfg = base_config();
    cfg.dt_max = 5e-3;
    const double phi = 2.0;
    using H = TestFunction::Harmonic::Kind;
    const TestFunction f =
        TestFunction::harmonic_on_side(H::Cos, 1, -1) + TestFunction::indicator_positive();

    const ExtensionSpec spec = ExtensionSpec::cone_symmetric();
    ExtensionSpec spec_rot = spec;
    spec_rot.mu_plus = spec.mu_plus.rotated(phi);
    spec_rot.mu_minus = spec.mu_minus.rotated(phi);

    const auto start = SurfacePoint::make(0.5, 0.3, geom.topology);
    const auto start_rot = SurfacePoint::make(0.5, 0.3 + phi, geom.topology);

    const MCResult base = estimate_semigroup(geom, spec, cfg, f, start, 0.5, 4000, 75, 2);
    const MCResult rot =
        estimate_semigroup(geom, spec_rot, cfg, f.rotated(phi), start_rot, 0.5, 4000, 75, 2);
    CHECK(std::fabs(base.mean - rot.mean) < 1e-10);
    CHECK(base.n == rot.n);
}

TEST_CASE("reflection invariance of the symmetric extension, statistically") {
    const auto geom = AlphaGeometry::make(-0.5);
    SimConfig cfg = base_config();
    cfg.dt_max = 5e-3;
    using H = TestFunction::Harmonic::Kind;
    const TestFunction f =
        TestFunction::harmonic_on_side(H::Cos, 1, -1) + TestFunction::indicator_positive();
    const ExtensionSpec spec = ExtensionSpec::cone_symmetric();
    const MCResult base = estimate_semigroup(
        geom, spec, cfg, f, SurfacePoint::make(0.5, 0.3, geom.topology), 0.5, 20000, 76, 2);
    const MCResult refl = estimate_semigroup(geom, spec, cfg, f.reflected(),
                                             SurfacePoint::make(-0.5, 0.3, geom.topology), 0.5,
                                             20000, 77, 2);
    CHECK(std::fabs(z_score(base, refl)) < kZThreshold);
}
