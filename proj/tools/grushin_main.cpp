// Command-line front end: classify, simulate, estimate, paper-suite.
// Every run is reproducible from a config file plus a 64-bit seed; the
// --seed flag overrides the config. Exit codes: 0 success, 2 config error,
// 3 acceptance failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "grushin/acceptance.hpp"
#include "grushin/config.hpp"
#include "grushin/estimators.hpp"
#include "grushin/simulate.hpp"
#include "grushin/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAcceptance = 3;

grushin::ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw grushin::ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return grushin::parse_config_text(ss.str());
}

int cmd_classify(double alpha) {
    const auto geom = grushin::AlphaGeometry::make(alpha);
    std::printf("%s, d=%g, %s\n", grushin::to_string(geom.boundary_class), geom.bessel_dim,
                grushin::to_string(geom.topology));
    return kExitOk;
}

int cmd_simulate(const grushin::ExperimentConfig& cfg, int threads) {
    (void)threads;  // trajectory export is written path by path
    const auto geom = cfg.geometry();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output.csv_dir);
    for (long long i = 0; i < cfg.n_paths; ++i) {
        const grushin::Trajectory traj = grushin::simulate_path(
            geom, cfg.extension, cfg.sim, cfg.experiment.start, cfg.seed,
            static_cast<std::uint64_t>(i));
        char name[64];
        std::snprintf(name, sizeof name, "path_%05lld.csv", i);
        std::ofstream out(fs::path(cfg.output.csv_dir) / name, std::ios::binary);
        grushin::write_trajectory_csv(out, traj);
    }
    std::printf("wrote %lld trajectories to %s\n", cfg.n_paths, cfg.output.csv_dir.c_str());
    return kExitOk;
}

void emit_record(std::ostream& os, const grushin::ExperimentConfig& cfg,
                 const std::string& experiment, const grushin::MCResult& r, double runtime_s,
                 const double* z = nullptr) {
    nlohmann::json params = grushin::config_to_json(cfg);
    params.erase("output");
    nlohmann::json rec{{"experiment", experiment},
                       {"params", params},
                       {"n", r.n},
                       {"mean", r.mean},
                       {"stderr", r.stderror()},
                       {"runtime_s", runtime_s},
                       {"seed", cfg.seed},
                       {"git_rev", grushin::kGitRev}};
    if (z) rec["z_score"] = *z;
    if (!r.extra.empty()) rec["extra"] = r.extra;
    os << rec.dump() << "\n";
}

int cmd_estimate(const grushin::ExperimentConfig& cfg, int threads) {
    using namespace grushin;
    const auto geom = cfg.geometry();
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!cfg.output.json_path.empty()) {
        file.open(cfg.output.json_path, std::ios::app);
        if (!file) throw ConfigError("output.json: cannot open '" + cfg.output.json_path + "'");
        os = &file;
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    const std::string& name = cfg.experiment.name;
    if (name == "hitting") {
        const MCResult r = estimate_hitting(geom, cfg.extension, cfg.sim, cfg.experiment.y,
                                            cfg.n_paths, cfg.seed, threads);
        emit_record(*os, cfg, name, r, elapsed());
    } else if (name == "occupation") {
        const MCResult r = estimate_occupation_fraction(geom, cfg.extension, cfg.sim,
                                                        cfg.n_paths, cfg.seed, threads);
        emit_record(*os, cfg, name, r, elapsed());
    } else if (name == "semigroup") {
        const MCResult r =
            estimate_semigroup(geom, cfg.extension, cfg.sim, cfg.experiment.f,
                               cfg.experiment.start, cfg.experiment.t, cfg.n_paths, cfg.seed,
                               threads);
        emit_record(*os, cfg, name, r, elapsed());
    } else if (name == "averaging_pair") {
        const PairCheckResult r = averaging_pair_check(
            geom, cfg.extension, cfg.sim, cfg.experiment.f, cfg.experiment.g,
            cfg.experiment.start, cfg.experiment.t, cfg.n_paths, cfg.seed, threads);
        emit_record(*os, cfg, name, r.diff, elapsed(), &r.z);
    } else if (name == "sign_stats") {
        const SignStats s = collect_sign_stats(geom, cfg.extension, cfg.sim,
                                               cfg.experiment.start, cfg.n_paths, cfg.seed,
                                               threads);
        MCResult r;
        r.n = s.n_pos + s.n_neg;
        r.mean = s.positive_fraction();
        r.m2 = r.mean * (1.0 - r.mean) * static_cast<double>(r.n);  // Bernoulli counts
        r.extra["n_pos"] = static_cast<double>(s.n_pos);
        r.extra["n_neg"] = static_cast<double>(s.n_neg);
        r.extra["n_sign_changes"] = static_cast<double>(s.n_sign_changes);
        emit_record(*os, cfg, name, r, elapsed());
    } else if (name == "theta_qv") {
        const MCResult r = estimate_theta_qv(geom, cfg.sim, cfg.experiment.start, cfg.n_paths,
                                             cfg.seed, threads);
        emit_record(*os, cfg, name, r, elapsed());
    } else if (name == "absorption_cdf") {
        const auto rs = estimate_absorption_cdf(geom, cfg.sim, cfg.experiment.z0,
                                                cfg.experiment.times, cfg.n_paths, cfg.seed,
                                                threads);
        for (std::size_t i = 0; i < rs.size(); ++i) {
            MCResult r = rs[i];
            r.extra["t"] = cfg.experiment.times[i];
            r.extra["oracle"] =
                grushin::besq0_absorption_prob(cfg.experiment.z0, cfg.experiment.times[i]);
            emit_record(*os, cfg, name, r, elapsed());
        }
    } else {
        throw ConfigError("experiment.name: '" + name + "' is not an estimator");
    }
    return kExitOk;
}

int cmd_paper_suite(std::uint64_t seed, int threads, bool list_only, double kappa_scale) {
    using namespace grushin;
    if (list_only) {
        for (const auto& name : acceptance_criterion_names()) std::printf("%s\n", name.c_str());
        return kExitOk;
    }
    AcceptanceOptions opts;
    opts.seed = seed;
    opts.threads = threads;
    opts.kappa_scale = kappa_scale;
    const auto results = run_acceptance(opts, &std::cout);
    int failed = 0;
    for (const auto& r : results)
        if (!r.pass) ++failed;
    std::printf("----\n%zu criteria, %d failed\n", results.size(), failed);
    if (failed > 0) {
        for (const auto& r : results)
            if (!r.pass) std::printf("failed: %s\n", r.name.c_str());
        return kExitAcceptance;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusions across Grushin-type singularities: simulation and Monte Carlo checks"};
    app.require_subcommand(1);

    int threads = 0;
    auto add_threads = [&](CLI::App* sub) {
        sub->add_option("--threads", threads,
                        "worker threads (default: GRUSHIN_THREADS or machine parallelism)");
    };

    double alpha = 0.0;
    auto* classify = app.add_subcommand("classify", "print the boundary class of alpha");
    classify->add_option("--alpha", alpha, "surface parameter")->required();

    std::string sim_config, est_config;
    bool have_seed = false;
    std::uint64_t seed_override = 0;
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed_override, "override the config seed")
            ->each([&](const std::string&) { have_seed = true; });
    };
    auto* simulate = app.add_subcommand("simulate", "write trajectory CSVs for a config");
    simulate->add_option("config", sim_config, "experiment config (JSON)")->required();
    add_seed(simulate);
    add_threads(simulate);
    auto* estimate = app.add_subcommand("estimate", "run the estimator named in a config");
    estimate->add_option("config", est_config, "experiment config (JSON)")->required();
    add_seed(estimate);
    add_threads(estimate);

    std::uint64_t suite_seed = 20260811;
    bool list_only = false;
    double kappa_scale = 1.0;
    auto* suite = app.add_subcommand("paper-suite", "run the acceptance battery");
    suite->add_option("--seed", suite_seed, "seed for the battery");
    suite->add_flag("--list", list_only, "print criterion names without running");
    suite->add_option("--dev-kappa-scale", kappa_scale,
                      "development/mutation testing: scale the sticky hold calibration");
    add_threads(suite);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(classify)) return cmd_classify(alpha);
        if (app.got_subcommand(simulate)) {
            grushin::ExperimentConfig cfg = load_config(sim_config);
            if (have_seed) cfg.seed = seed_override;
            return cmd_simulate(cfg, threads);
        }
        if (app.got_subcommand(estimate)) {
            grushin::ExperimentConfig cfg = load_config(est_config);
            if (have_seed) cfg.seed = seed_override;
            return cmd_estimate(cfg, threads);
        }
        if (app.got_subcommand(suite))
            return cmd_paper_suite(suite_seed, threads, list_only, kappa_scale);
    } catch (const grushin::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
