#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "stochwave/ensemble.hpp"
#include "stochwave/expansion.hpp"
#include "stochwave/io.hpp"
#include "stochwave/parallel.hpp"
#include "stochwave/simulate.hpp"

namespace fs = std::filesystem;
using namespace stochwave;

namespace {

constexpr int EXIT_HYPOTHESIS = 2;
constexpr int EXIT_SOLVER = 3;
constexpr int EXIT_REPORT_EMPTY = 4;

struct Pipeline {
    RunConfig cfg;
    GridPtr grid;
    ModelSpec model;
    std::vector<CovarianceKernel> kernels;
};

Pipeline open_pipeline(const RunConfig& cfg) {
    Pipeline p;
    p.cfg = cfg;
    p.grid = cfg.make_grid_ptr();
    p.model = cfg.make_model();
    p.kernels = cfg.make_kernels(p.grid);
    auto rep = check_hypotheses(p.model, p.kernels, p.grid);
    if (!rep.ok) {
        std::cerr << "hypothesis checks failed: " << rep.message << "\n";
        std::exit(EXIT_HYPOTHESIS);
    }
    return p;
}

WavePair solve_deterministic(const Pipeline& p) {
    BvpOptions opt;
    opt.tol = p.cfg.newton_tol;
    opt.max_iter = p.cfg.max_iter;
    opt.order = p.cfg.order;
    if (p.cfg.model_name == "nagumo")
        return solve_wave_bvp(p.model, nagumo_explicit(p.grid, p.cfg.a, p.cfg.rho), opt);
    return solve_fhn_wave(p.model, p.grid, opt);
}

int cmd_wave(const RunConfig& cfg) {
    Pipeline p = open_pipeline(cfg);
    WavePair wave = solve_deterministic(p);
    auto rep = spectral_report(p.model, wave, std::min(801, cfg.N), 5.0, 32, cfg.seed);
    wave.beta = rep.beta;
    fs::create_directories(cfg.out_dir);
    write_wave_file((fs::path(cfg.out_dir) / "wave.txt").string(), cfg, wave, 0.0);
    json man;
    man["command"] = "wave";
    man["config"] = cfg.raw;
    man["config_hash"] = cfg.hash();
    man["c0"] = wave.c;
    man["beta"] = rep.beta;
    man["lambda0"] = rep.lambda0;
    man["decay_ratio_t5"] = rep.decay_ratio;
    man["residual_inf"] = wave_residual_inf(p.model, wave.phi, wave.c);
    write_manifest(cfg.out_dir, man);
    std::printf("wave: c = %.10f, beta = %.4f, file %s/wave.txt\n", wave.c, rep.beta,
                cfg.out_dir.c_str());
    return 0;
}

int cmd_stochwave(const RunConfig& cfg) {
    Pipeline p = open_pipeline(cfg);
    WavePair wave = solve_deterministic(p);
    auto ex = expand_second_order(p.model, p.kernels, wave);
    fs::create_directories(cfg.out_dir);
    StochWaveOptions opt;
    opt.tol = cfg.newton_tol;
    opt.max_iter = cfg.max_iter;
    opt.sigma_step = cfg.sigma_step;
    json list = json::array();
    for (double s : cfg.sigmas) {
        auto sw = solve_instantaneous_wave(p.model, p.kernels, wave, s, opt);
        char name[64];
        std::snprintf(name, sizeof(name), "wave_sigma_%.4f.txt", s);
        write_wave_file((fs::path(cfg.out_dir) / name).string(), cfg, sw.wave, s,
                        ex.c_02);
        list.push_back({{"sigma", s}, {"c_sigma", sw.wave.c}, {"file", name}});
        std::printf("stochwave: sigma = %.4f  c_sigma = %.8f\n", s, sw.wave.c);
    }
    json man;
    man["command"] = "stochwave";
    man["config"] = cfg.raw;
    man["config_hash"] = cfg.hash();
    man["c0"] = wave.c;
    man["c_02"] = ex.c_02;
    man["waves"] = list;
    write_manifest(cfg.out_dir, man);
    return 0;
}

int cmd_expand(const RunConfig& cfg) {
    Pipeline p = open_pipeline(cfg);
    WavePair wave = solve_deterministic(p);
    auto srep = spectral_report(p.model, wave, std::min(601, cfg.N), 5.0, 16, cfg.seed);
    wave.beta = srep.beta;
    auto ex = expand_second_order(p.model, p.kernels, wave);
    auto ctx = make_expansion_context(p.model, p.kernels, wave, cfg.k_max, cfg.dt_sg,
                                      cfg.t_int);
    auto sweep = run_expansion_sweep(ctx, cfg.snapshot_times, cfg.threads);
    WaveOperator op(p.model, wave);
    auto [vod_raw, mult] = op.solve_bordered(sweep.v_od_rhs);
    (void)mult;
    Profile vod = vod_raw;
    scale(vod, -1.0);

    fs::create_directories(cfg.out_dir);
    std::string hash = cfg.hash();
    write_profile_csv((fs::path(cfg.out_dir) / "profiles.csv").string(), hash, wave.phi,
                      {&wave.psi, &ex.phi_02, &vod}, {"phi", "psi", "phi02", "vod"});
    for (size_t i = 0; i < sweep.times.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "ev2_t%g.csv", sweep.times[i]);
        write_profile_csv((fs::path(cfg.out_dir) / name).string(), hash, sweep.ev2[i],
                          {}, {"ev2_"});
    }

    json man;
    man["command"] = "expand";
    man["config"] = cfg.raw;
    man["config_hash"] = hash;
    man["c0"] = wave.c;
    man["beta"] = srep.beta;
    man["c_02"] = ex.c_02;
    man["c_od_02"] = sweep.c_od;
    man["c_od_tail_bound"] = sweep.tail_bound;
    man["T_int"] = ctx.T_int;
    man["k_max"] = cfg.k_max;
    man["sigma_grid"] = cfg.sigmas;
    if (cfg.cubic_realizations > 0) {
        double s = cfg.sigmas.empty() ? 0.3 : cfg.sigmas.front();
        auto sw = solve_instantaneous_wave(p.model, p.kernels, wave, s);
        auto ctx_s = make_expansion_context(p.model, p.kernels, wave, sw, cfg.k_max,
                                            cfg.dt_sg, cfg.t_int);
        auto g3 = gamma3_rate(ctx_s, s, cfg.cubic_realizations, cfg.cubic_T, cfg.dt,
                              cfg.seed, cfg.threads);
        man["cubic"] = {{"sigma", s},
                        {"c_cub", g3.c_cub},
                        {"std_error", g3.std_error},
                        {"rate_over_sigma3", g3.rate_over_sigma3},
                        {"realizations", g3.realizations},
                        {"low_sample_warning", g3.low_sample_warning}};
    }
    write_manifest(cfg.out_dir, man);
    std::printf("expand: c0 = %.8f  c_02 = %.6f  c_od_02 = %.6f (tail %.1e)\n", wave.c,
                ex.c_02, sweep.c_od, sweep.tail_bound);
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    Pipeline p = open_pipeline(cfg);
    WavePair wave = solve_deterministic(p);
    double sigma = cfg.sigmas.empty() ? 0.0 : cfg.sigmas.front();
    auto sw = solve_instantaneous_wave(p.model, p.kernels, wave, sigma);
    SimSetup setup = make_sim_setup(p.model, p.kernels, wave, sw);
    SimConfig sim;
    sim.dt = cfg.dt;
    sim.T = cfg.T;
    sim.frame = cfg.frame == "lab_U" ? Frame::lab_U : Frame::wave_V;
    sim.sigma = sigma;
    sim.k_up = cfg.k_up;
    sim.record_every = cfg.record_every;
    sim.seed = cfg.seed;
    sim.keep_snapshots = !cfg.snapshot_times.empty();
    auto path = run_simulation(setup, sim);

    fs::create_directories(cfg.out_dir);
    std::string hash = cfg.hash();
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < path.times.size(); ++i)
        rows.push_back({path.times[i], path.gamma[i], path.v_l2sq[i], path.a_hist[i],
                        path.b_hs_sq_hist[i]});
    write_csv((fs::path(cfg.out_dir) / "path.csv").string(), hash,
              {"t", "gamma", "v_l2sq", "a", "b_hs_sq"}, rows);
    if (sim.keep_snapshots) {
        for (size_t i = 0; i < path.snapshots.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "state_t%g.csv", path.times[i]);
            write_profile_csv((fs::path(cfg.out_dir) / name).string(), hash,
                              path.snapshots[i], {}, {"u"});
        }
    }
    json man;
    man["command"] = "simulate";
    man["config"] = cfg.raw;
    man["config_hash"] = hash;
    man["sigma"] = sigma;
    man["c_sigma"] = sw.wave.c;
    man["frame"] = cfg.frame;
    if (path.tracking_failed_at) man["tracking_failed_at"] = *path.tracking_failed_at;
    if (path.blow_up_at) man["blow_up_at"] = *path.blow_up_at;
    write_manifest(cfg.out_dir, man);
    std::printf("simulate: T = %g, Gamma(T) = %.6f%s\n", cfg.T, path.gamma.back(),
                path.tracking_failed_at ? " [tracking lost]" : "");
    return 0;
}

int cmd_ensemble(const RunConfig& cfg) {
    Pipeline p = open_pipeline(cfg);
    WavePair wave = solve_deterministic(p);
    EnsembleSpec spec;
    spec.model = p.model;
    spec.kernels = p.kernels;
    spec.wave_det = wave;
    spec.sigmas = cfg.sigmas;
    spec.realizations = cfg.realizations;
    spec.base_seed = cfg.seed;
    spec.sim.dt = cfg.dt;
    spec.sim.T = cfg.T;
    spec.sim.k_up = cfg.k_up;
    spec.sim.record_every = cfg.record_every;
    spec.snapshot_times = cfg.snapshot_times;
    spec.stability_epsilon = cfg.stability_epsilon;
    spec.stability_eta = cfg.stability_eta;
    spec.k_max = cfg.k_max;
    spec.n_threads = cfg.threads;
    auto stats = run_ensemble(spec);

    fs::create_directories(cfg.out_dir);
    std::string hash = cfg.hash();
    json summary;
    summary["command"] = "ensemble";
    summary["config"] = cfg.raw;
    summary["config_hash"] = hash;
    summary["valid"] = stats.valid;
    json per = json::array();
    for (const auto& ps : stats.per_sigma) {
        char base[64];
        std::snprintf(base, sizeof(base), "sigma_%.4f", ps.sigma);
        std::vector<std::vector<double>> rows;
        for (size_t i = 0; i < ps.times.size(); ++i)
            rows.push_back({ps.times[i], ps.mean_gamma_dev[i], ps.se_gamma_dev[i],
                            ps.var_gamma[i], ps.se_var_gamma[i], ps.mean_v2[i],
                            ps.se_v2[i], ps.mean_vres2[i], ps.se_vres2[i],
                            ps.mean_sup[i], ps.se_sup[i], ps.mean_N[i], ps.mean_Nres[i]});
        write_csv((fs::path(cfg.out_dir) / (std::string(base) + "_stats.csv")).string(),
                  hash,
                  {"t", "mean_gamma_dev", "se_gamma_dev", "var_gamma", "se_var_gamma",
                   "mean_v2", "se_v2", "mean_vres2", "se_vres2", "mean_sup", "se_sup",
                   "mean_N", "mean_Nres"},
                  rows);
        for (size_t i = 0; i < ps.snapshot_at.size(); ++i) {
            char name[96];
            std::snprintf(name, sizeof(name), "%s_meanV_t%g.csv", base,
                          ps.snapshot_at[i]);
            write_profile_csv((fs::path(cfg.out_dir) / name).string(), hash,
                              ps.mean_V_snap[i], {}, {"meanV"});
        }
        per.push_back({{"sigma", ps.sigma},
                       {"c_sigma", ps.c_sigma},
                       {"c_obs", ps.c_obs},
                       {"n_effective", ps.n_effective},
                       {"n_failed", ps.n_failed},
                       {"frac_stopped", ps.frac_stopped}});
        std::printf("ensemble: sigma = %.4f  c_sigma = %.6f  c_obs = %.6f  (R = %d, "
                    "failed = %d)\n",
                    ps.sigma, ps.c_sigma, ps.c_obs, ps.n_effective, ps.n_failed);
    }
    summary["per_sigma"] = per;
    if (stats.per_sigma.size() >= 2) {
        auto rep = scaling_report(stats);
        summary["scaling"] = {{"v2_slope", rep.v2_slope},
                              {"v2_ci", rep.v2_ci},
                              {"vres2_slope", rep.vres2_slope},
                              {"vres2_ci", rep.vres2_ci},
                              {"sup_slope", rep.sup_slope},
                              {"sup_ci", rep.sup_ci}};
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "summary.json");
        out << summary.dump(2) << "\n";
    }
    write_manifest(cfg.out_dir, summary);
    return stats.valid ? 0 : EXIT_SOLVER;
}

int cmd_report(const std::string& stats_dir, const std::string& out_dir) {
    fs::path in(stats_dir);
    if (!fs::exists(in / "summary.json")) {
        std::cerr << "report: no summary.json under " << stats_dir << "\n";
        return EXIT_REPORT_EMPTY;
    }
    json summary;
    {
        std::ifstream f(in / "summary.json");
        f >> summary;
    }
    std::string hash = summary.value("config_hash", "unknown");
    fs::create_directories(out_dir);

    // speed-vs-sigma table
    std::vector<std::vector<double>> speed_rows;
    for (const auto& ps : summary["per_sigma"])
        speed_rows.push_back({ps["sigma"], ps["c_sigma"], ps["c_obs"]});
    write_csv((fs::path(out_dir) / "fig_speed_vs_sigma.csv").string(), hash,
              {"sigma", "c_sigma", "c_obs"}, speed_rows);

    int copied = 0;
    for (const auto& ps : summary["per_sigma"]) {
        double s = ps["sigma"];
        char base[64];
        std::snprintf(base, sizeof(base), "sigma_%.4f", s);
        fs::path src = in / (std::string(base) + "_stats.csv");
        if (!fs::exists(src)) continue;
        std::ifstream f(src);
        std::string line;
        std::getline(f, line);
        std::getline(f, line);
        std::vector<std::vector<double>> drift, norms, sup;
        while (std::getline(f, line)) {
            std::vector<double> v;
            std::istringstream ss(line);
            std::string tok;
            while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
            if (v.size() < 13) continue;
            drift.push_back({v[0], v[1], v[2]});
            norms.push_back({v[0], v[5], v[6], v[7], v[8]});
            sup.push_back({v[0], v[9], v[10]});
        }
        char name[96];
        std::snprintf(name, sizeof(name), "fig_drift_%s.csv", base);
        write_csv((fs::path(out_dir) / name).string(), hash,
                  {"t", "mean_gamma_dev", "se"}, drift);
        std::snprintf(name, sizeof(name), "fig_norms_%s.csv", base);
        write_csv((fs::path(out_dir) / name).string(), hash,
                  {"t", "mean_v2", "se_v2", "mean_vres2", "se_vres2"}, norms);
        std::snprintf(name, sizeof(name), "fig_sup_%s.csv", base);
        write_csv((fs::path(out_dir) / name).string(), hash, {"t", "mean_sup", "se"},
                  sup);
        ++copied;
    }

    if (summary.contains("scaling")) {
        const auto& sc = summary["scaling"];
        write_csv((fs::path(out_dir) / "fig_scaling_slopes.csv").string(), hash,
                  {"v2_slope", "v2_ci", "vres2_slope", "vres2_ci", "sup_slope", "sup_ci"},
                  {{sc["v2_slope"], sc["v2_ci"], sc["vres2_slope"], sc["vres2_ci"],
                    sc["sup_slope"], sc["sup_ci"]}});
    }
    std::ofstream rep(fs::path(out_dir) / "report.txt");
    rep << "stochwave report\n";
    rep << "source: " << stats_dir << "\n";
    rep << "config_hash: " << hash << "\n";
    rep << "sigma series reproduced: " << copied << "\n";
    std::printf("report: wrote figure CSVs for %d sigma series to %s\n", copied,
                out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic travelling waves for reaction-diffusion SPDEs"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<double> sigma_override;
    uint64_t seed_override = 0;
    bool seed_set = false;
    std::string out_override;
    int threads = 0;
    std::string stats_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--sigma", sigma_override, "noise strength (repeatable)");
        sub->add_option("--seed", seed_override, "base RNG seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--out", out_override, "output directory");
        sub->add_option("--threads", threads,
                        "worker threads (default: STOCHWAVE_THREADS or all cores)");
    };

    auto* wave = app.add_subcommand("wave", "solve the deterministic travelling wave");
    auto* stoch = app.add_subcommand("stochwave", "solve instantaneous stochastic waves");
    auto* expand = app.add_subcommand("expand", "sigma-power expansion coefficients");
    auto* simulate = app.add_subcommand("simulate", "one SPDE realization");
    auto* ensemble = app.add_subcommand("ensemble", "Monte-Carlo ensemble statistics");
    auto* report = app.add_subcommand("report", "plot-ready CSVs from ensemble output");
    for (auto* s : {wave, stoch, expand, simulate, ensemble}) add_common(s);
    report->add_option("--stats", stats_dir, "ensemble output directory")->required();
    report->add_option("--out", out_override, "report output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) {
            std::string out = out_override.empty() ? stats_dir + "/report" : out_override;
            return cmd_report(stats_dir, out);
        }
        RunConfig cfg;
        if (!config_path.empty())
            cfg = load_config(config_path);
        else
            cfg = parse_config(json::object());
        if (!sigma_override.empty()) {
            cfg.sigmas = sigma_override;
            cfg.raw["ensemble"]["sigma"] = sigma_override;
        }
        if (seed_set) {
            cfg.seed = seed_override;
            cfg.raw["ensemble"]["seed"] = seed_override;
        }
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (threads > 0) cfg.threads = threads;

        if (wave->parsed()) return cmd_wave(cfg);
        if (stoch->parsed()) return cmd_stochwave(cfg);
        if (expand->parsed()) return cmd_expand(cfg);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (ensemble->parsed()) return cmd_ensemble(cfg);
    } catch (const NewtonDiverged& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return EXIT_SOLVER;
    } catch (const DegenerateJacobian& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return EXIT_SOLVER;
    } catch (const NonSimpleKernel& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return EXIT_SOLVER;
    } catch (const NotPositiveSemidefinite& e) {
        std::cerr << "hypothesis failure: " << e.what() << "\n";
        return EXIT_HYPOTHESIS;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return EXIT_HYPOTHESIS;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
