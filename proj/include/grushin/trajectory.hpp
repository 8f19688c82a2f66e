#pragma once

#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace grushin {

enum class EventKind { HitZ, ExcursionStart, Absorbed, WallReflect };

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::HitZ;
    int sign = 0;        // ExcursionStart only
    double x = 0.0;      // state at the event (0 for Z events, +-wall for WALL)
    double theta = 0.0;  // ExcursionStart: entrance angle at the shell
};

struct Sample {
    double t = 0.0;
    double x = 0.0;  // signed; exactly 0 at Z
    double theta = 0.0;
};

/// Per-path summary accumulated during simulation, so estimators do not need
/// to retain sample lists.
struct PathStats {
    double time_at_z = 0.0;      // holds plus the absorbed tail
    double first_hit_z = std::numeric_limits<double>::infinity();
    double absorbed_at = std::numeric_limits<double>::infinity();
    double qv_theta = 0.0;       // sum of squared theta increments
    double qv_y = 0.0;           // sum of squared natural-scale increments
    long n_pos = 0;              // positive excursion starts
    long n_neg = 0;
    long n_sign_changes = 0;
    long n_hit_z = 0;
    long n_wall = 0;
    long n_steps = 0;
    double min_absx_after_entry = std::numeric_limits<double>::infinity();
    double max_absx = 0.0;
    double final_t = 0.0;
    double final_x = 0.0;
    double final_theta = 0.0;
    bool absorbed = false;
    // level-stop outcome (first passage runs)
    bool stopped_at_level = false;
    int stop_side = 0;
    double stop_time = std::numeric_limits<double>::infinity();
};

struct Trajectory {
    std::vector<Sample> samples;  // strictly increasing times
    std::vector<Event> events;    // non-decreasing times
    PathStats stats;
};

namespace detail {
inline void append_g17(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}
}  // namespace detail

/// CSV export: header `t,x,theta,event`, floating point at 17 significant
/// digits. Rows are the recorded samples merged with the event log; an
/// instantaneous transition (a hit followed by a zero-length hold) produces
/// consecutive rows sharing a timestamp, so `t` is non-decreasing.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    std::string line;
    os << "t,x,theta,event\n";
    auto event_token = [](const Event& e) {
        switch (e.kind) {
            case EventKind::HitZ: return std::string("HITZ");
            case EventKind::Absorbed: return std::string("ABSORB");
            case EventKind::WallReflect: return std::string("WALL");
            default: break;
        }
        std::string s = e.sign > 0 ? "EXSTART:+1:" : "EXSTART:-1:";
        detail::append_g17(s, e.theta);
        return s;
    };
    auto write_row = [&](double t, double x, double theta, const std::string& ev) {
        line.clear();
        detail::append_g17(line, t);
        line += ',';
        detail::append_g17(line, x);
        line += ',';
        detail::append_g17(line, theta);
        line += ',';
        line += ev;
        line += '\n';
        os << line;
    };
    std::size_t ei = 0;
    for (const Sample& s : traj.samples) {
        while (ei < traj.events.size() && traj.events[ei].t <= s.t) {
            const Event& e = traj.events[ei++];
            write_row(e.t, e.x, e.theta, event_token(e));
        }
        write_row(s.t, s.x, s.theta, "");
    }
    while (ei < traj.events.size()) {
        const Event& e = traj.events[ei++];
        write_row(e.t, e.x, e.theta, event_token(e));
    }
}

}  // namespace grushin
