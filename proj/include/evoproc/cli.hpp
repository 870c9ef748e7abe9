#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "evoproc/config.hpp"
#include "evoproc/io.hpp"
#include "evoproc/rates.hpp"

namespace evoproc {
namespace cli {

inline std::string example_config(const std::string& name) {
    if (name == "rd-paper") {
        return R"json({
  "schema": "evoproc-config/1",
  "kind": "reaction-diffusion",
  "seed": 20240501,
  "theta": 0.9,
  "space": { "n_cells": 32 },
  "coefficients": {
    "a": "2 + sin(t) + eps * (0.5 + x)",
    "a_grad_x": "eps",
    "f": "tanh(s) + eps * sin(s)",
    "growth_rho": 1.0
  },
  "eps_list": [0.1, 0.03, 0.01, 0.003],
  "grid": { "tau": 0.0, "t_end": 1.0, "n_steps": 64, "rule": "graded", "grading_q": 2.0 },
  "hypotheses": { "beta": 0.5, "delta": 1.0, "t_window": [0.0, 2.0], "t_samples": 5 },
  "nonlinearity": { "cutoff_radius": 6.0 },
  "initial": "1 + cos(pi * x)",
  "rates": { "reference_time": 1.0 },
  "absorbing": { "horizon": 20.0, "n_initial": 10, "initial_norm": 10.0, "s_range": 50.0, "n_steps": 96 }
}
)json";
    }
    if (name == "wave-paper") {
        return R"json({
  "schema": "evoproc-config/1",
  "kind": "wave",
  "seed": 20240502,
  "theta": 0.9,
  "space": { "n_modes": 16 },
  "coefficients": { "a": "1.5 + 0.4 * sin(t)" },
  "alpha_list": [0.6, 0.8, 0.9, 0.95, 0.99],
  "grid": { "tau": 0.0, "t_end": 1.0, "n_steps": 32, "rule": "graded", "grading_q": 2.0 },
  "hypotheses": { "beta": 1.0, "delta": 1.0, "t_window": [0.0, 2.0], "t_samples": 5 },
  "initial": "1 / (x * x)",
  "rates": { "reference_time": 1.0 }
}
)json";
    }
    if (name == "scalar-sanity") {
        return R"json({
  "schema": "evoproc-config/1",
  "kind": "scalar",
  "seed": 20240503,
  "theta": 0.9,
  "coefficients": { "a": "1 + eps * (1 + 0.5 * sin(t))", "f": "0.5 * s + eps * 0.1" },
  "eps_list": [0.1, 0.03, 0.01, 0.003],
  "grid": { "tau": 0.0, "t_end": 1.0, "n_steps": 48, "rule": "graded", "grading_q": 2.0 },
  "hypotheses": { "beta": 1.0, "delta": 1.0, "t_window": [0.0, 2.0], "t_samples": 5 },
  "nonlinearity": { "cutoff_radius": 5.0 },
  "initial": "1",
  "rates": { "reference_time": 1.0 }
}
)json";
    }
    throw ConfigError("unknown example '" + name +
                      "' (available: rd-paper, wave-paper, scalar-sanity)");
}

namespace detail_cli {

inline nlohmann::json sector_json(const SectorReport& s) {
    nlohmann::json j;
    j["ok"] = s.ok;
    j["worst_c_x"] = s.worst_c_x;
    j["worst_c_y"] = s.worst_c_y;
    j["worst_c_xy_beta"] = s.worst_c_xy_beta;
    j["phi"] = s.phi;
    j["beta"] = s.beta;
    if (!s.ok) {
        j["failed_t"] = s.failed_t;
        j["failed_lambda"] = {s.failed_lambda.real(), s.failed_lambda.imag()};
        j["failure"] = s.failure;
    }
    return j;
}

inline nlohmann::json member_hypotheses(const ExperimentConfig& cfg, const ProblemBundle& bundle,
                                        const ProblemBundle& limit, double eps) {
    std::vector<double> t_samples;
    for (int i = 0; i < cfg.hyp_t_samples; ++i)
        t_samples.push_back(cfg.hyp_t_lo + (cfg.hyp_t_hi - cfg.hyp_t_lo) * i /
                                               std::max(1, cfg.hyp_t_samples - 1));
    nlohmann::json j;
    j["eps"] = eps;
    j["sector"] = sector_json(check_sector(bundle.fam, bundle.fam.declared->phi, t_samples,
                                           cfg.lambda_per_ray));
    std::vector<double> probe;
    for (int i = 0; i < 8; ++i)
        probe.push_back(cfg.hyp_t_lo + (cfg.hyp_t_hi - cfg.hyp_t_lo) * i / 7.0);
    const HolderFit fit = estimate_delta(bundle.fam, probe, cfg.hyp_t_lo);
    j["delta_fit"] = {{"autonomous", fit.autonomous},
                      {"delta", fit.autonomous ? nullptr : nlohmann::json(fit.delta_fit)},
                      {"holder_const", fit.holder_const}};
    j["declared"] = {{"phi", bundle.fam.declared->phi},
                     {"beta", bundle.fam.declared->beta},
                     {"delta", bundle.fam.declared->delta},
                     {"holder_const", bundle.fam.declared->holder_const}};
    if (eps > 0.0) {
        j["eta"] = eta(bundle.fam, limit.fam, t_samples);
        j["xi"] = xi(bundle.fam, limit.fam, t_samples, t_samples);
    }
    if (!cfg.f_expr.empty()) {
        std::mt19937_64 rng(cfg.seed);
        const double ball = cfg.cutoff_radius.value_or(1.0);
        const NonlinearitySample ns = sample_nonlinearity(bundle.F, t_samples, ball, 32, rng);
        j["nonlinearity"] = {{"lip_sampled", ns.lip}, {"bound_sampled", ns.bound}};
    }
    return j;
}

inline nlohmann::json axiom_json(const AxiomReport& r, double phi_bound) {
    return {{"cocycle_defect", r.cocycle_defect},
            {"generator_residual", r.generator_residual},
            {"bound_const", r.bound_const},
            {"dt_derivative_bound", r.dt_derivative_bound},
            {"triples_checked", r.triples_checked},
            {"phi_singularity_bound", phi_bound}};
}

inline nlohmann::json settings_json(const ExperimentConfig& cfg) {
    return {{"grid_n_steps", cfg.grid.n_steps},
            {"grid_rule", cfg.grid.rule == GridRule::Graded ? "graded" : "uniform"},
            {"grading_q", cfg.grid.grading_q},
            {"contour_nodes_per_ray", cfg.contour.nodes_per_ray},
            {"contour_phi", cfg.contour.phi},
            {"phi_tol", cfg.phi.tol},
            {"phi_max_iter", cfg.phi.max_iter},
            {"picard_tol", cfg.semilinear.tol},
            {"picard_max_iter", cfg.semilinear.max_iter},
            {"beta", cfg.beta},
            {"delta", cfg.declared_delta}};
}

inline std::string trajectory_csv(const Trajectory& t, const DiscreteSpace& sp) {
    std::string out = "t,y_norm,x_norm\n";
    for (std::size_t i = 0; i < t.nodes.size(); ++i)
        out += format_double(t.nodes[i]) + "," + format_double(t.y_norms[i]) + "," +
               format_double(sp.norm(t.states[i], NormKind::X)) + "\n";
    return out;
}

inline std::string trajectory_states_csv(const Trajectory& t) {
    std::string out;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        out += format_double(t.nodes[i]);
        for (long k = 0; k < t.states[i].size(); ++k) out += "," + format_double(t.states[i](k));
        out += "\n";
    }
    return out;
}

inline nlohmann::json process_dump(const EvolutionProcess& proc) {
    nlohmann::json j;
    j["schema"] = "evoproc-process/1";
    j["nodes"] = proc.nodes();
    j["dim"] = proc.space().dim();
    j["extent"] = proc.extent() == ProcessExtent::AllPairs ? "all-pairs" : "first-column";
    nlohmann::json entries = nlohmann::json::array();
    const int n = static_cast<int>(proc.nodes().size()) - 1;
    for (int i = 1; i <= n; ++i) {
        const int jmax = proc.extent() == ProcessExtent::AllPairs ? i - 1 : 0;
        for (int jj = 0; jj <= jmax; ++jj) {
            const Matrix u = proc.at(i, jj);
            std::vector<double> flat(u.size());
            for (long r = 0; r < u.rows(); ++r)
                for (long c = 0; c < u.cols(); ++c) flat[r * u.cols() + c] = u(r, c);
            entries.push_back({{"i", i}, {"j", jj}, {"u", flat}});
        }
    }
    j["entries"] = entries;
    return j;
}

} // namespace detail_cli

/// CLI entry point; returns the process exit code. Streams are injected so
/// tests can run subcommands in-process.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"evolution-process convergence laboratory"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand arguments

    std::string out_dir = ".";
    int threads = 1;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    bool verbose = false;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads for parallel maps");
    app.add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_flag("--verbose", verbose, "chat about progress on stderr");

    std::string config_path, example_name;
    bool dump = false, states = false;

    CLI::App* c_hyp = app.add_subcommand("check-hypotheses", "measure the hypothesis constants");
    c_hyp->add_option("config", config_path, "config file")->required();
    CLI::App* c_prop = app.add_subcommand("propagate", "build processes and check the axioms");
    c_prop->add_option("config", config_path, "config file")->required();
    c_prop->add_flag("--dump", dump, "dump the limiting process grid as JSON");
    CLI::App* c_solve = app.add_subcommand("solve", "solve the semilinear problem");
    c_solve->add_option("config", config_path, "config file")->required();
    c_solve->add_flag("--states", states, "also write full state sidecar files");
    CLI::App* c_rates = app.add_subcommand("rates", "run the convergence-rate experiment");
    c_rates->add_option("config", config_path, "config file")->required();
    CLI::App* c_example = app.add_subcommand("example", "write a ready-made config");
    c_example->add_option("name", example_name, "rd-paper | wave-paper | scalar-sanity")->required();

    try {
        std::vector<const char*> argv;
        argv.push_back("evoproc");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    thread_count() = std::max(1, threads);
    const std::filesystem::path odir(out_dir);

    try {
        if (c_example->parsed()) {
            const std::string text = example_config(example_name);
            const auto path = odir / (example_name + ".json");
            atomic_write(path, text);
            out << path.string() << "\n";
            return 0;
        }

        if (!std::filesystem::exists(config_path)) {
            err << "error: config file not found: " << config_path << "\n";
            return 2;
        }
        ExperimentConfig cfg = load_config(config_path);
        if (seed_given) cfg.seed = seed_override;

        if (c_hyp->parsed()) {
            const ProblemBundle limit = make_bundle(cfg, 0.0);
            nlohmann::json j;
            j["schema"] = "evoproc-hypotheses/1";
            j["config_hash"] = cfg.config_hash;
            j["seed"] = cfg.seed;
            j["settings"] = detail_cli::settings_json(cfg);
            j["limit"] = detail_cli::member_hypotheses(cfg, limit, limit, 0.0);
            nlohmann::json members = nlohmann::json::array();
            for (double e : cfg.eps_list) {
                if (verbose) err << "checking hypotheses at eps=" << e << "\n";
                members.push_back(
                    detail_cli::member_hypotheses(cfg, make_bundle(cfg, e), limit, e));
            }
            j["members"] = members;
            atomic_write(odir / "hypotheses.json", j.dump(2) + "\n");
            out << (odir / "hypotheses.json").string() << "\n";
            return 0;
        }

        if (c_prop->parsed()) {
            nlohmann::json j;
            j["schema"] = "evoproc-axioms/1";
            j["config_hash"] = cfg.config_hash;
            j["seed"] = cfg.seed;
            j["settings"] = detail_cli::settings_json(cfg);
            nlohmann::json members = nlohmann::json::array();
            std::vector<double> all_eps{0.0};
            for (double e : cfg.eps_list) all_eps.push_back(e);
            for (double e : all_eps) {
                if (verbose) err << "propagating at eps=" << e << "\n";
                const ProblemBundle b = make_bundle(cfg, e);
                SemigroupEvaluator ev(b.fam, cfg.contour);
                PhiOptions phi_opts = cfg.phi;
                phi_opts.delta = effective_delta(cfg, b.fam);
                const PhiResolvent phi = solve_phi(ev, cfg.grid, phi_opts);
                const EvolutionProcess proc = build_process(ev, phi, cfg.grid, {});
                AxiomReport rep = check_process_axioms(proc);
                nlohmann::json m = detail_cli::axiom_json(rep, phi.singularity_bound(*b.space));
                m["eps"] = e;
                members.push_back(m);
                if (dump && e == 0.0)
                    atomic_write(odir / "process_U.json",
                                 detail_cli::process_dump(proc).dump() + "\n");
            }
            j["members"] = members;
            atomic_write(odir / "process_axioms.json", j.dump(2) + "\n");
            out << (odir / "process_axioms.json").string() << "\n";
            return 0;
        }

        if (c_solve->parsed()) {
            nlohmann::json manifest;
            manifest["schema"] = "evoproc-solve/1";
            manifest["config_hash"] = cfg.config_hash;
            manifest["seed"] = cfg.seed;
            manifest["settings"] = detail_cli::settings_json(cfg);
            nlohmann::json files = nlohmann::json::array();
            std::vector<double> all_eps{0.0};
            for (double e : cfg.eps_list) all_eps.push_back(e);
            int idx = 0;
            for (double e : all_eps) {
                if (verbose) err << "solving at eps=" << e << "\n";
                const ProblemBundle b = make_bundle(cfg, e);
                SemigroupEvaluator ev(b.fam, cfg.contour);
                PhiOptions phi_opts = cfg.phi;
                phi_opts.delta = effective_delta(cfg, b.fam);
                const PhiResolvent phi = solve_phi(ev, cfg.grid, phi_opts);
                const EvolutionProcess proc = build_process(ev, phi, cfg.grid, {});
                SemilinearOptions sl = cfg.semilinear;
                sl.beta = cfg.beta;
                const Trajectory traj =
                    solve_semilinear(proc, b.F, make_initial_state(cfg, b), sl);
                const std::string name =
                    idx == 0 ? "trajectory_limit.csv"
                             : "trajectory_" + std::to_string(idx) + ".csv";
                atomic_write(odir / name, detail_cli::trajectory_csv(traj, *b.space));
                if (states)
                    atomic_write(odir / (name.substr(0, name.size() - 4) + "_states.csv"),
                                 detail_cli::trajectory_states_csv(traj));
                files.push_back({{"eps", e}, {"file", name}});
                ++idx;
            }
            manifest["trajectories"] = files;
            atomic_write(odir / "solve.json", manifest.dump(2) + "\n");
            out << (odir / "solve.json").string() << "\n";
            return 0;
        }

        if (c_rates->parsed()) {
            if (verbose) err << "running rate experiment\n";
            const RateReport rep = run_rate_experiment(cfg);
            atomic_write(odir / "report.json", rate_report_json(rep, cfg).dump(2) + "\n");
            atomic_write(odir / "rates.csv", rates_csv(rep));
            out << (odir / "report.json").string() << "\n";
            if (!rep.failed_stage.empty()) {
                err << "error: stage '" << rep.failed_stage << "' failed: " << rep.failure_message
                    << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace cli
} // namespace evoproc
