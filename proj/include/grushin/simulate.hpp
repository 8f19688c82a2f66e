#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "grushin/bessel.hpp"
#include "grushin/errors.hpp"
#include "grushin/extension.hpp"
#include "grushin/geometry.hpp"
#include "grushin/random.hpp"
#include "grushin/trajectory.hpp"

namespace grushin {

/// Simulation controls. Excursions are accounted at |x| = epsilon_shell;
/// hit_resolution * epsilon_shell sets the working resolution at Z (the dt
/// floor and the evaluation clamp for the angular coefficient). dt adapts as
/// dt_rel * x^2 near the singularity; the squared-Bessel kernel is exact at
/// any dt, so away from Z only dt_max and the theta-variance cap matter.
struct SimConfig {
    double epsilon_shell = 0.01;
    double dt_max = 1e-3;
    double horizon = 10.0;
    std::optional<double> wall;  // reflecting truncation at |x| = wall
    long record_stride = 1;      // 0: record only events, checkpoints and endpoints

    // scheme internals
    double dt_rel = 0.25;        // dt <= dt_rel * x^2 near Z
    double hit_resolution = 1e-3;
    double theta_var_mult = 16.0;  // per-step theta variance cap, in units of dt_max

    void validate() const {
        if (!(epsilon_shell > 0.0)) throw ConfigError("sim.epsilon_shell: must be > 0");
        if (!(dt_max > 0.0)) throw ConfigError("sim.dt_max: must be > 0");
        if (!(horizon > 0.0)) throw ConfigError("sim.horizon: must be > 0");
        if (record_stride < 0) throw ConfigError("sim.record_stride: must be >= 0");
        if (wall && !(*wall > epsilon_shell))
            throw ConfigError("sim.wall: must exceed sim.epsilon_shell");
        if (!(dt_rel > 0.0 && dt_rel <= 1.0)) throw ConfigError("sim.dt_rel: must be in (0,1]");
        if (!(hit_resolution > 0.0 && hit_resolution < 1.0))
            throw ConfigError("sim.hit_resolution: must be in (0,1)");
        if (!(theta_var_mult > 0.0)) throw ConfigError("sim.theta_var_mult: must be > 0");
    }

    double x_hit() const { return hit_resolution * epsilon_shell; }

    bool operator==(const SimConfig&) const = default;
};

/// Normalization of the sticky hold time. A return to Z is followed by an
/// exponential hold with mean
///
///   kappa * gamma * a(1-a) * epsilon^(1+alpha)
///
/// where a(1-a) eps^(1+alpha) is the two-sided scale Green factor
/// s(eps)(-s(-eps)) / (s(eps)-s(-eps)) of the interval (-eps, eps): the mean
/// time the sticky diffusion spends on the atom per passage from 0 to the
/// shell. Renewal over shell cycles then reproduces the speed-measure
/// occupation fraction gamma / (gamma + m) as epsilon -> 0, fixing kappa = 1.
inline constexpr double kStickyHoldKappa = 1.0;

inline double sticky_hold_mean(double alpha, double a, double gamma, double epsilon_shell) {
    if (gamma == 0.0) return 0.0;
    return kStickyHoldKappa * gamma * a * (1.0 - a) * std::pow(epsilon_shell, 1.0 + alpha);
}

struct DispatchResult {
    bool absorb = false;
    double hold_duration = 0.0;
    int sign = +1;
    double entrance_theta = 0.0;
};

/// Behavior when the path sits at Z in the cone / entrance-only regimes:
/// absorb, or hold (sticky cone) and then re-enter on a side drawn with
/// probability a, with the entrance angle drawn from mu+ or mu-.
inline DispatchResult boundary_dispatch(const AlphaGeometry& geom, const ExtensionSpec& spec,
                                        double epsilon_shell, Rng& rng) {
    if (spec.is_cylinder_kind())
        throw std::logic_error("boundary_dispatch: cylinder kinds use cylinder_boundary_rule");
    DispatchResult r;
    if (spec.absorbs()) {
        r.absorb = true;
        return r;
    }
    if (spec.kind == ExtensionSpec::Kind::Cone && spec.gamma > 0.0) {
        r.hold_duration =
            rng.exponential(sticky_hold_mean(geom.alpha, spec.a, spec.gamma, epsilon_shell));
    }
    r.sign = rng.bernoulli(spec.a) ? +1 : -1;
    r.entrance_theta = (r.sign > 0 ? spec.mu_plus : spec.mu_minus).sample(rng);
    return r;
}

/// Outgoing excursion sign at a cylinder touch of Z.
inline int cylinder_boundary_rule(const ExtensionSpec& spec, double hit_theta,
                                  int incoming_sign, Rng& rng) {
    switch (spec.kind) {
        case ExtensionSpec::Kind::CylinderSymmetric:
            return rng.bernoulli(0.5) ? +1 : -1;
        case ExtensionSpec::Kind::CylinderNeumann:
            return incoming_sign;
        case ExtensionSpec::Kind::CylinderNonLocal:
            return spec.nonlocal_set.contains(hit_theta) ? +1 : -1;
        default:
            throw std::logic_error("cylinder_boundary_rule: not a cylinder kind");
    }
}

namespace detail {

struct KernelAdvance {
    double z = 0.0;
    double dt = 0.0;
    bool hit = false;
};

/// Advance z by the exact squared-Bessel kernel over dt, detecting arrival
/// at 0 through the Bessel-bridge touching probability: the flag draw
/// realizes the touch event exactly (probability 1 - survival given the
/// endpoints), so a flagged step IS a hit. The only approximation is placing
/// the hit at the step end, a time error below one step; chained over steps
/// this makes the declared first-hit time exact in law at the step
/// resolution, which the adaptive dt keeps proportional to x^2 near Z.
///
/// Two things must NOT be done here: ending the excursion on a small
/// endpoint alone (that truncates the real time the path still spends below
/// the threshold), and re-simulating a flagged step "for a closer look" (the
/// replacement would be unconditioned on the touch and excursion ends would
/// be undercounted).
inline KernelAdvance kernel_advance(double dim, double z, double dt, Rng& rng) {
    BesqParams params{dim, dim < 2.0 ? BesqMode::Absorbing : BesqMode::Reflecting};
    const double z2 = besq_step_exact(params, z, dt, rng);
    if (z2 == 0.0) return {0.0, dt, true};  // d = 0 absorbing atom
    if (dim >= 2.0) return {z2, dt, false};  // 0 unreachable
    const double survive = besq_bridge_survival_prob(dim, z, z2, dt);
    if (survive < 1.0 && rng.uniform() >= survive) return {0.0, dt, true};
    return {z2, dt, false};
}

}  // namespace detail

struct StepResult {
    double x = 0.0;
    double theta = 0.0;
    double dt = 0.0;    // time advanced; a hit is placed at the step end
    bool hit_z = false;
    double theta_var = 0.0;  // variance given to the theta increment
};

/// One interior step from x != 0. The radial move uses the exact
/// squared-Bessel transition on z = x^2 for d = 1-alpha >= 0 (Euler with
/// drift -alpha/(2x) for d < 0); the sign is preserved within the step. The
/// theta increment is N(0, q) with q the realized quadratic-variation
/// increment of the natural-scale coordinate, estimated from the step
/// endpoints, since the two diffusion coefficients coincide in natural scale.
inline StepResult step_interior(const AlphaGeometry& geom, double x, double theta, double dt,
                                Rng& rng, const SimConfig& cfg = SimConfig{}) {
    if (x == 0.0)
        throw std::logic_error("step_interior: at Z; use boundary_dispatch / cylinder rule");
    if (!(dt > 0.0)) throw std::domain_error("step_interior: dt must be positive");
    const double d = geom.bessel_dim;
    const double absx = std::fabs(x);
    const int sign = x > 0.0 ? +1 : -1;
    const double x_hit = cfg.x_hit();
    StepResult out;
    double absx2;
    if (d >= 0.0) {
        const auto adv =
            detail::kernel_advance(d, absx * absx, dt, rng);
        out.dt = adv.dt;
        out.hit_z = adv.hit;
        absx2 = adv.hit ? 0.0 : std::sqrt(adv.z);
    } else {
        const double drift = -geom.alpha / (2.0 * absx) * dt;
        const double next = absx + std::sqrt(dt) * rng.normal() + drift;
        out.dt = dt;
        if (next <= x_hit || rng.uniform() < std::exp(-2.0 * absx * std::max(next, 0.0) / dt)) {
            out.hit_z = true;
            absx2 = 0.0;
        } else {
            absx2 = next;
        }
    }
    const double clamp = x_hit;
    auto sigma2 = [&](double u) {
        return std::pow(geom.alpha < 0.0 ? std::max(u, clamp) : u, 2.0 * geom.alpha);
    };
    out.theta_var = out.dt * 0.5 * (sigma2(absx) + sigma2(absx2));
    out.theta = norm_angle(theta + std::sqrt(out.theta_var) * rng.normal());
    out.x = sign * absx2;
    return out;
}

/// Extra controls for estimator runs on top of SimConfig.
struct EngineOptions {
    std::vector<double> checkpoints;  // ascending times in [0, horizon]
    double stop_level = std::numeric_limits<double>::infinity();  // stop at |x| >= level
    bool stop_at_first_hit_z = false;
    bool collect_samples = true;
    bool collect_events = true;
    double hold_mean_scale = 1.0;  // dev knob: corrupts the sticky calibration
};

struct RunResult {
    Trajectory traj;
    std::vector<Sample> at_checkpoints;  // one per requested checkpoint
};

namespace detail {

class PathEngine {
public:
    PathEngine(const AlphaGeometry& geom, const ExtensionSpec& spec, const SimConfig& cfg,
               const EngineOptions& opts, SurfacePoint start, Rng& rng)
        : geom_(geom), spec_(spec), cfg_(cfg), opts_(opts), rng_(rng) {
        cfg_.validate();
        spec_.validate_for(geom_);
        x_hit_ = cfg_.x_hit();
        z_hit_ = x_hit_ * x_hit_;
        d_ = geom_.bessel_dim;
        theta_ = norm_angle(start.theta);
        absx_ = std::fabs(start.x);
        sign_ = start.x >= 0.0 ? +1 : -1;
        if (absx_ <= x_hit_) {
            absx_ = 0.0;
            at_z_ = true;
            if (geom_.topology == Topology::Cone) theta_ = 0.0;
        }
        if (cfg_.wall && absx_ > *cfg_.wall)
            throw ConfigError("start: |x| must not exceed the wall");
        sigma2_cur_ = sigma2(absx_);
    }

    RunResult run() {
        record_sample(0.0, current_x(), theta_);
        serve_checkpoints();
        if (at_z_ && !done_) handle_start_at_z();
        while (!done_) {
            if (absorbed_) {
                finish_absorbed();
                break;
            }
            if (at_z_) {
                dispatch_at_z();
                continue;
            }
            interior_step();
        }
        finalize();
        return RunResult{std::move(traj_), std::move(checkpoint_states_)};
    }

private:
    double current_x() const { return at_z_ || absorbed_ ? 0.0 : sign_ * absx_; }

    double sigma2(double absx) const {
        const double u = geom_.alpha < 0.0 ? std::max(absx, x_hit_) : absx;
        return std::pow(u, 2.0 * geom_.alpha);
    }

    double natural_scale(double absx) const {
        const double p = geom_.alpha + 1.0;
        return p > 0.0 ? std::pow(absx, p) / p : 0.0;
    }

    void record_sample(double t, double x, double theta) {
        if (!opts_.collect_samples) return;
        if (!traj_.samples.empty() && !(t > traj_.samples.back().t)) return;
        traj_.samples.push_back({t, x, theta});
    }

    void record_event(const Event& e) {
        if (opts_.collect_events) traj_.events.push_back(e);
    }

    void serve_checkpoints() {
        while (ckpt_ < opts_.checkpoints.size() && t_ >= opts_.checkpoints[ckpt_]) {
            checkpoint_states_.push_back({opts_.checkpoints[ckpt_], current_x(), theta_});
            record_sample(opts_.checkpoints[ckpt_], current_x(), theta_);
            ++ckpt_;
        }
    }

    double next_time_cap() const {
        double cap = cfg_.horizon;
        if (ckpt_ < opts_.checkpoints.size())
            cap = std::min(cap, opts_.checkpoints[ckpt_]);
        return cap;
    }

    void excursion_started(int sign, double theta, double x_at) {
        if (have_prev_sign_ && sign != prev_sign_) ++traj_.stats.n_sign_changes;
        prev_sign_ = sign;
        have_prev_sign_ = true;
        (sign > 0 ? traj_.stats.n_pos : traj_.stats.n_neg)++;
        entered_ = true;
        record_event({t_, EventKind::ExcursionStart, sign, x_at, theta});
    }

    void hit_z_bookkeeping() {
        traj_.stats.n_hit_z++;
        traj_.stats.first_hit_z = std::min(traj_.stats.first_hit_z, t_);
    }

    void handle_start_at_z() {
        // Starting on the singular set. Cylinder kinds enter through the
        // reflecting kernel; the initial side comes from the boundary rule
        // (a fair coin for the Neumann rule, whose one-sided state is not
        // defined on Z itself).
        if (spec_.is_cylinder_kind()) {
            int s;
            if (spec_.kind == ExtensionSpec::Kind::CylinderNonLocal)
                s = spec_.nonlocal_set.contains(theta_) ? +1 : -1;
            else
                s = rng_.bernoulli(0.5) ? +1 : -1;
            sign_ = s;
            at_z_ = false;
            excursion_started(sign_, theta_, 0.0);
            return;
        }
        if (geom_.boundary_class == BoundaryClass::Exit) {
            // alpha >= 1: Z is a trap
            absorbed_ = true;
            traj_.stats.absorbed_at = t_;
            traj_.stats.absorbed = true;
            record_event({t_, EventKind::Absorbed, 0, 0.0, theta_});
            return;
        }
        // cone / entrance-only dispatch happens in the main loop
    }

    void dispatch_at_z() {
        DispatchResult d = boundary_dispatch(geom_, spec_, cfg_.epsilon_shell, rng_);
        if (d.absorb) {
            absorbed_ = true;
            traj_.stats.absorbed_at = t_;
            traj_.stats.absorbed = true;
            record_event({t_, EventKind::Absorbed, 0, 0.0, 0.0});
            return;
        }
        if (d.hold_duration > 0.0) {
            double hold = d.hold_duration * opts_.hold_mean_scale;
            const double end = std::min(t_ + hold, cfg_.horizon);
            traj_.stats.time_at_z += end - t_;
            t_ = end;
            serve_checkpoints();
            if (t_ >= cfg_.horizon) {
                done_ = true;
                return;
            }
        }
        sign_ = d.sign;
        theta_ = d.entrance_theta;
        absx_ = cfg_.epsilon_shell;
        sigma2_cur_ = sigma2(absx_);
        at_z_ = false;
        excursion_started(sign_, theta_, sign_ * absx_);
        if (opts_.collect_samples && cfg_.record_stride > 0)
            record_sample(t_, current_x(), theta_);
    }

    double choose_dt(double cap) const {
        double dt = cfg_.dt_max;
        const double z = absx_ * absx_;
        // progress floor: steps never shrink below the resolution scale, so a
        // deep dip cannot stall the clock
        double floor;
        if (d_ >= 0.0) {
            if (spec_.is_cylinder_kind()) {
                // no pinning at Z: steps straddle the touches of 0
                floor = cfg_.dt_rel * cfg_.epsilon_shell * cfg_.epsilon_shell;
            } else {
                floor = cfg_.dt_rel * z_hit_;
            }
            dt = std::min(dt, cfg_.dt_rel * z);
        } else {
            floor = cfg_.dt_rel * z_hit_;
            dt = std::min(dt, 0.1 * z / (1.0 + std::fabs(geom_.alpha)));
        }
        if (geom_.alpha != 0.0) {
            // theta jump-size cap; a floored step near a deep dip may exceed
            // it, where the wrapped law is uniform anyway
            const double cap_q = cfg_.theta_var_mult * cfg_.dt_max;
            dt = std::min(dt, cap_q / sigma2_cur_);
        }
        return std::min(std::max(dt, floor), cap);
    }

    void interior_step() {
        const double cap_t = next_time_cap();
        const double time_left = cap_t - t_;
        const double dt = choose_dt(time_left);
        const bool lands_on_cap = dt == time_left;
        double absx2;
        double dt_used = dt;
        bool hit = false;
        bool touched = false;  // cylinder: touched 0 within the step
        if (d_ > 0.0) {
            if (spec_.is_cylinder_kind()) {
                BesqParams params{d_, BesqMode::Reflecting};
                const double z2 = besq_step_exact(params, absx_ * absx_, dt, rng_);
                if (z2 <= z_hit_) {
                    touched = true;
                } else if (d_ < 2.0) {
                    const double p = besq_bridge_survival_prob(d_, absx_ * absx_, z2, dt);
                    touched = p < 1.0 && rng_.uniform() >= p;
                }
                absx2 = std::sqrt(z2);
            } else {
                const auto adv =
                    detail::kernel_advance(d_, absx_ * absx_, dt, rng_);
                dt_used = adv.dt;
                hit = adv.hit;
                absx2 = hit ? 0.0 : std::sqrt(adv.z);
            }
        } else if (d_ == 0.0) {
            BesqParams params{0.0, BesqMode::Absorbing};
            const double z2 = besq_step_exact(params, absx_ * absx_, dt, rng_);
            if (z2 == 0.0) {
                hit = true;
                absx2 = 0.0;
            } else {
                absx2 = std::sqrt(z2);
            }
        } else {
            const double drift = -geom_.alpha / (2.0 * absx_) * dt;
            const double next = absx_ + std::sqrt(dt) * rng_.normal() + drift;
            if (next <= x_hit_ ||
                rng_.uniform() < std::exp(-2.0 * absx_ * std::max(next, 0.0) / dt)) {
                hit = true;
                absx2 = 0.0;
            } else {
                absx2 = next;
            }
        }

        // theta rides the same clock: N(0, q) with q the natural-scale QV
        // increment estimated from the endpoints
        const double sigma2_next = sigma2(absx2);
        const double q = dt_used * 0.5 * (sigma2_cur_ + sigma2_next);
        const double dtheta = std::sqrt(q) * rng_.normal();
        theta_ = norm_angle(theta_ + dtheta);
        traj_.stats.qv_theta += dtheta * dtheta;
        if (geom_.alpha > -1.0) {
            const double dy = natural_scale(absx2) - natural_scale(absx_);
            traj_.stats.qv_y += dy * dy;
        }

        const bool exact_landing = !hit && dt_used == dt && lands_on_cap;
        t_ = exact_landing ? cap_t : t_ + dt_used;
        absx_ = absx2;
        sigma2_cur_ = sigma2_next;
        traj_.stats.n_steps++;

        if (cfg_.wall && absx_ > *cfg_.wall) {
            // mirror |x| back into [0, wall]
            const double w = *cfg_.wall;
            double v = std::fmod(absx_, 2.0 * w);
            absx_ = v > w ? 2.0 * w - v : v;
            sigma2_cur_ = sigma2(absx_);
            traj_.stats.n_wall++;
            record_event({t_, EventKind::WallReflect, 0, sign_ * w, theta_});
        }

        traj_.stats.max_absx = std::max(traj_.stats.max_absx, absx_);
        if (entered_ && !hit)
            traj_.stats.min_absx_after_entry =
                std::min(traj_.stats.min_absx_after_entry, absx_);

        if (hit) {
            // cone-regime arrival at Z
            at_z_ = true;
            absx_ = 0.0;
            if (geom_.topology == Topology::Cone) theta_ = 0.0;
            hit_z_bookkeeping();
            record_event({t_, EventKind::HitZ, 0, 0.0, theta_});
            if (geom_.boundary_class == BoundaryClass::Exit) {
                absorbed_ = true;
                traj_.stats.absorbed_at = t_;
                traj_.stats.absorbed = true;
                record_event({t_, EventKind::Absorbed, 0, 0.0, theta_});
            }
            if (opts_.stop_at_first_hit_z) {
                done_ = true;
                return;
            }
        } else if (touched) {
            // cylinder touch: all bookkeeping at the step endpoint
            hit_z_bookkeeping();
            record_event({t_, EventKind::HitZ, 0, 0.0, theta_});
            const int out = cylinder_boundary_rule(spec_, theta_, sign_, rng_);
            sign_ = out;
            excursion_started(out, theta_, sign_ * absx_);
            if (opts_.stop_at_first_hit_z) {
                done_ = true;
                return;
            }
        }

        serve_checkpoints();
        if (opts_.collect_samples && cfg_.record_stride > 0 &&
            traj_.stats.n_steps % cfg_.record_stride == 0)
            record_sample(t_, current_x(), theta_);

        if (absx_ >= opts_.stop_level) {
            traj_.stats.stopped_at_level = true;
            traj_.stats.stop_side = sign_;
            traj_.stats.stop_time = t_;
            done_ = true;
            return;
        }
        if (t_ >= cfg_.horizon) done_ = true;
    }

    void finish_absorbed() {
        traj_.stats.time_at_z += cfg_.horizon - t_;
        t_ = cfg_.horizon;
        serve_checkpoints();
        done_ = true;
    }

    void finalize() {
        serve_checkpoints();
        // a run stopped early leaves later checkpoints at the stop state
        while (ckpt_ < opts_.checkpoints.size()) {
            checkpoint_states_.push_back({opts_.checkpoints[ckpt_], current_x(), theta_});
            ++ckpt_;
        }
        record_sample(t_, current_x(), theta_);
        traj_.stats.final_t = t_;
        traj_.stats.final_x = current_x();
        traj_.stats.final_theta = theta_;
    }

    AlphaGeometry geom_;
    ExtensionSpec spec_;
    SimConfig cfg_;
    EngineOptions opts_;
    Rng& rng_;

    double d_ = 1.0;
    double x_hit_ = 0.0, z_hit_ = 0.0;
    double t_ = 0.0;
    double absx_ = 0.0;
    double theta_ = 0.0;
    double sigma2_cur_ = 1.0;
    int sign_ = +1;
    int prev_sign_ = 0;
    bool have_prev_sign_ = false;
    bool at_z_ = false;
    bool absorbed_ = false;
    bool entered_ = false;
    bool done_ = false;
    std::size_t ckpt_ = 0;
    Trajectory traj_;
    std::vector<Sample> checkpoint_states_;
};

}  // namespace detail

/// Full path over [0, horizon]: interior stepping plus the boundary behavior
/// of the extension. Deterministic function of all arguments and the seed.
inline Trajectory simulate_path(const AlphaGeometry& geom, const ExtensionSpec& spec,
                                const SimConfig& cfg, SurfacePoint start,
                                std::uint64_t seed, std::uint64_t stream_id = 0) {
    Rng rng(seed, stream_id);
    detail::PathEngine engine(geom, spec, cfg, EngineOptions{}, start, rng);
    return engine.run().traj;
}

/// As simulate_path but with estimator controls (checkpoints, stop rules).
inline RunResult run_path(const AlphaGeometry& geom, const ExtensionSpec& spec,
                          const SimConfig& cfg, const EngineOptions& opts,
                          SurfacePoint start, Rng& rng) {
    detail::PathEngine engine(geom, spec, cfg, opts, start, rng);
    return engine.run();
}

/// One excursion fragment: enters at |x| = epsilon_shell on the given side
/// with the given angle and runs until the next arrival at Z (or horizon).
inline Trajectory run_excursion(const AlphaGeometry& geom, const ExtensionSpec& spec,
                                int entrance_sign, double entrance_theta,
                                const SimConfig& cfg, Rng& rng) {
    if (geom.boundary_class == BoundaryClass::Exit)
        throw ConfigError("run_excursion: requires alpha < 1");
    EngineOptions opts;
    opts.stop_at_first_hit_z = true;
    const SurfacePoint start = SurfacePoint::make(
        entrance_sign * cfg.epsilon_shell, entrance_theta, geom.topology);
    detail::PathEngine engine(geom, spec, cfg, opts, start, rng);
    return std::move(engine.run().traj);
}

}  // namespace grushin
