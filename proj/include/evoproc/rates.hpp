#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoproc/config.hpp"
#include "evoproc/process.hpp"
#include "evoproc/semilinear.hpp"

namespace evoproc {

/// Measured convergence quantities of one experiment, the fitted log-log
/// slopes, and the pass flags of the rate checks. ell and rho are derived
/// from the measured rates by construction and asserted as such.
struct RateReport {
    std::string kind;
    std::vector<double> eps_grid;
    double theta = 0.9;

    std::vector<double> eta_vals, xi_vals, gamma_vals, ell_vals, rho_vals;
    std::vector<double> process_err, solution_err;
    std::vector<double> lambda_inv_vals; // wave kind only

    std::map<std::string, double> fitted_slopes;
    std::map<std::string, std::string> slope_flags; // "ok" | "exact" | "missing"
    double fitted_K = 0.0;
    double delta_used = 1.0;
    double reference_time = 1.0;
    double window_lo = 0.0, window_hi = 0.0;

    bool process_rate_ok = false;
    bool solution_rate_ok = false;
    bool wave_rate_ok = false;

    std::string failed_stage; // empty on success
    std::string failure_message;

    std::string config_hash;
    std::uint64_t seed = 0;
};

/// Kernel singularity exponent actually used by the quadrature: the
/// conservative minimum of the declared value and a fit on the family
/// (autonomous families keep the declared value).
inline double effective_delta(const ExperimentConfig& cfg, const OperatorFamily& fam) {
    std::vector<double> probe;
    for (int i = 0; i < 8; ++i)
        probe.push_back(cfg.hyp_t_lo + (cfg.hyp_t_hi - cfg.hyp_t_lo) * i / 7.0);
    const HolderFit fit = estimate_delta(fam, probe, cfg.hyp_t_lo);
    if (fit.autonomous) return cfg.declared_delta;
    const double used = std::min(cfg.declared_delta, std::min(fit.delta_fit, 1.0));
    return used > 0.0 ? used : cfg.declared_delta;
}

namespace detail {

struct SlopeFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::string flag = "missing";
};

inline SlopeFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
    SlopeFit out;
    if (xs.size() != ys.size() || xs.empty()) return out;
    double scale = 0.0;
    for (double y : ys) scale = std::max(scale, std::abs(y));
    if (scale <= 0.0) {
        out.flag = "exact";
        return out;
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 1e-14 * scale)) continue;
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    if (lx.size() < 2) return out;
    out.slope = fit_line(lx, ly).first;
    out.flag = "ok";
    return out;
}

inline int nearest_node(const std::vector<double>& nodes, double t) {
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (std::abs(nodes[i] - t) < std::abs(nodes[best] - t)) best = static_cast<int>(i);
    return best;
}

} // namespace detail

/// End-to-end rate experiment: hypothesis gaps, processes, solutions, and
/// log-log slope fits per the configured epsilon grid. Failures leave a
/// stage tag and whatever was measured before the failure.
inline RateReport run_rate_experiment(const ExperimentConfig& cfg) {
    RateReport rep;
    rep.kind = cfg.kind;
    rep.eps_grid = cfg.eps_list;
    rep.theta = cfg.theta;
    rep.config_hash = cfg.config_hash;
    rep.seed = cfg.seed;
    rep.reference_time = cfg.reference_time;
    rep.window_lo = cfg.hyp_t_lo;
    rep.window_hi = cfg.hyp_t_hi;

    std::string stage = "build";
    try {
        const ProblemBundle limit = make_bundle(cfg, 0.0);
        std::vector<ProblemBundle> members;
        for (double e : cfg.eps_list) members.push_back(make_bundle(cfg, e));

        std::vector<double> t_samples;
        for (int i = 0; i < cfg.hyp_t_samples; ++i)
            t_samples.push_back(cfg.hyp_t_lo +
                                (cfg.hyp_t_hi - cfg.hyp_t_lo) * i /
                                    std::max(1, cfg.hyp_t_samples - 1));

        stage = "hypotheses";
        const bool has_f = !cfg.f_expr.empty();
        std::vector<Vector> u_samples;
        {
            std::mt19937_64 rng(cfg.seed);
            std::normal_distribution<double> gauss(0.0, 1.0);
            const double ball = cfg.cutoff_radius.value_or(1.0);
            for (int k = 0; k < 8; ++k) {
                Vector u(limit.space->dim());
                for (long i = 0; i < u.size(); ++i) u(i) = gauss(rng);
                const double r = ball * (0.125 + 0.875 * k / 7.0);
                u *= r / std::max(limit.space->norm(u, NormKind::Y), 1e-300);
                u_samples.push_back(u);
            }
        }
        for (std::size_t m = 0; m < members.size(); ++m) {
            rep.eta_vals.push_back(eta(members[m].fam, limit.fam, t_samples));
            rep.xi_vals.push_back(xi(members[m].fam, limit.fam, t_samples, t_samples));
            rep.gamma_vals.push_back(has_f ? gamma(members[m].F, limit.F, t_samples, u_samples)
                                           : 0.0);
            rep.ell_vals.push_back(std::max(std::pow(rep.eta_vals[m], cfg.theta),
                                            std::pow(rep.xi_vals[m], cfg.theta)));
            rep.rho_vals.push_back(std::max(rep.ell_vals[m], rep.gamma_vals[m]));
        }

        stage = "delta";
        rep.delta_used = effective_delta(cfg, limit.fam);

        stage = "process";
        PhiOptions phi_opts = cfg.phi;
        phi_opts.delta = rep.delta_used;
        const ProcessExtent extent =
            (has_f && cfg.kind != "wave") ? ProcessExtent::AllPairs : ProcessExtent::FirstColumn;

        SemigroupEvaluator limit_ev(limit.fam, cfg.contour);
        const PhiResolvent limit_phi = solve_phi(limit_ev, cfg.grid, phi_opts);
        const EvolutionProcess limit_proc = build_process(limit_ev, limit_phi, cfg.grid, {extent});
        const int ref =
            detail::nearest_node(limit_proc.nodes(), cfg.grid.tau + cfg.reference_time);

        {
            // growth constant of the limiting process over the window tail
            std::vector<double> xs, ys;
            const auto& nodes = limit_proc.nodes();
            for (std::size_t i = 1; i < nodes.size(); ++i) {
                if (nodes[i] - nodes.front() < 0.5 * (nodes.back() - nodes.front())) continue;
                xs.push_back(nodes[i] - nodes.front());
                ys.push_back(std::log(std::max(
                    limit.space->op_norm(limit_proc.at(static_cast<int>(i), 0), NormKind::X,
                                         NormKind::X),
                    1e-300)));
            }
            if (xs.size() >= 2) rep.fitted_K = detail::fit_line(xs, ys).first;
        }

        std::vector<Trajectory> trajs;
        Trajectory limit_traj;
        SemilinearOptions sl = cfg.semilinear;
        sl.beta = cfg.beta;
        const bool solve_solutions = has_f && cfg.kind != "wave";
        if (solve_solutions) {
            const Vector u0 = make_initial_state(cfg, limit);
            limit_traj = solve_semilinear(limit_proc, limit.F, u0, sl);
            for (std::size_t m = 0; m < members.size(); ++m) {
                SemigroupEvaluator ev(members[m].fam, cfg.contour);
                const PhiResolvent phi = solve_phi(ev, cfg.grid, phi_opts);
                const EvolutionProcess proc = build_process(ev, phi, cfg.grid, {extent});
                rep.process_err.push_back(
                    process_distance(proc, limit_proc, DistanceNorm::X)[ref - 1].second);
                trajs.push_back(solve_semilinear(proc, members[m].F, u0, sl));
            }
        } else {
            for (std::size_t m = 0; m < members.size(); ++m) {
                SemigroupEvaluator ev(members[m].fam, cfg.contour);
                const PhiResolvent phi = solve_phi(ev, cfg.grid, phi_opts);
                const EvolutionProcess proc = build_process(ev, phi, cfg.grid, {extent});
                rep.process_err.push_back(
                    process_distance(proc, limit_proc, DistanceNorm::X)[ref - 1].second);
            }
        }

        if (solve_solutions) {
            stage = "solution";
            for (auto& traj : trajs)
                rep.solution_err.push_back(
                    solution_distance(traj, limit_traj, *limit.space)[ref].second);
        }

        if (cfg.kind == "wave") {
            stage = "wave-fractional";
            WaveConfig wc;
            wc.n_modes = cfg.n_modes;
            const Expr a = ExprParser::parse(cfg.a_expr);
            wc.a = [a](double t) {
                ExprEnv env;
                env.t = t;
                return a(env);
            };
            for (double alpha : cfg.alpha_list) {
                double worst = 0.0;
                for (double t : t_samples) {
                    const Matrix d =
                        wave_lambda_inverse_alpha(wc, alpha, t) - wave_lambda_inverse_alpha(wc, 1.0, t);
                    worst = std::max(worst, limit.space->op_norm(d, NormKind::X, NormKind::X));
                }
                rep.lambda_inv_vals.push_back(worst);
            }
        }

        stage = "fit";
        auto put = [&](const std::string& key, const std::vector<double>& vals,
                       const std::vector<double>& xs) {
            const detail::SlopeFit f = detail::fit_loglog(xs, vals);
            rep.fitted_slopes[key] = f.slope;
            rep.slope_flags[key] = f.flag;
        };
        put("eta", rep.eta_vals, rep.eps_grid);
        put("xi", rep.xi_vals, rep.eps_grid);
        put("gamma", rep.gamma_vals, rep.eps_grid);
        put("ell", rep.ell_vals, rep.eps_grid);
        put("rho", rep.rho_vals, rep.eps_grid);
        put("process_err", rep.process_err, rep.eps_grid);
        put("solution_err", rep.solution_err, rep.eps_grid);
        if (!rep.lambda_inv_vals.empty()) put("lambda_inv", rep.lambda_inv_vals, rep.eps_grid);

        const auto ok = [&](const std::string& k) { return rep.slope_flags[k] == "ok"; };
        if (ok("process_err") && ok("ell"))
            rep.process_rate_ok = rep.fitted_slopes["process_err"] >=
                                  0.9 * cfg.theta * rep.fitted_slopes["ell"];
        if (ok("solution_err")) {
            double driver = std::numeric_limits<double>::infinity();
            if (ok("eta")) driver = std::min(driver, cfg.theta * rep.fitted_slopes["eta"]);
            if (ok("xi")) driver = std::min(driver, cfg.theta * rep.fitted_slopes["xi"]);
            if (ok("gamma")) driver = std::min(driver, rep.fitted_slopes["gamma"]);
            if (std::isfinite(driver))
                rep.solution_rate_ok = rep.fitted_slopes["solution_err"] >= 0.9 * driver;
        }
        if (ok("lambda_inv"))
            rep.wave_rate_ok = std::abs(rep.fitted_slopes["lambda_inv"] - 1.0) <= 0.15;
    } catch (const std::exception& e) {
        rep.failed_stage = stage;
        rep.failure_message = e.what();
    }
    return rep;
}

inline nlohmann::json rate_report_json(const RateReport& rep, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema"] = "evoproc-report/1";
    j["kind"] = rep.kind;
    j["config_hash"] = rep.config_hash;
    j["seed"] = rep.seed;
    j["theta"] = rep.theta;
    j["eps_grid"] = rep.eps_grid;
    j["eta"] = rep.eta_vals;
    j["xi"] = rep.xi_vals;
    j["gamma"] = rep.gamma_vals;
    j["ell"] = rep.ell_vals;
    j["rho"] = rep.rho_vals;
    j["process_err"] = rep.process_err;
    j["solution_err"] = rep.solution_err;
    if (!rep.lambda_inv_vals.empty()) j["lambda_inv"] = rep.lambda_inv_vals;
    nlohmann::json slopes;
    for (const auto& [k, v] : rep.fitted_slopes) {
        if (std::isfinite(v))
            slopes[k] = v;
        else
            slopes[k] = nullptr;
    }
    j["fitted_slopes"] = slopes;
    j["slope_flags"] = rep.slope_flags;
    j["fitted_K"] = rep.fitted_K;
    j["delta_used"] = rep.delta_used;
    j["reference_time"] = rep.reference_time;
    j["window"] = {rep.window_lo, rep.window_hi};
    nlohmann::json checks;
    checks["process_rate_ok"] = rep.process_rate_ok;
    if (!rep.solution_err.empty()) checks["solution_rate_ok"] = rep.solution_rate_ok;
    if (!rep.lambda_inv_vals.empty()) checks["wave_rate_ok"] = rep.wave_rate_ok;
    j["checks"] = checks;
    j["settings"] = {{"grid_n_steps", cfg.grid.n_steps},
                     {"grid_rule", cfg.grid.rule == GridRule::Graded ? "graded" : "uniform"},
                     {"grading_q", cfg.grid.grading_q},
                     {"contour_nodes_per_ray", cfg.contour.nodes_per_ray},
                     {"contour_phi", cfg.contour.phi},
                     {"phi_tol", cfg.phi.tol},
                     {"picard_tol", cfg.semilinear.tol},
                     {"beta", cfg.beta}};
    if (!rep.failed_stage.empty()) {
        j["failed_stage"] = rep.failed_stage;
        j["failure"] = rep.failure_message;
    }
    return j;
}

inline std::string rates_csv(const RateReport& rep) {
    std::string out = "eps,eta,xi,gamma,ell,rho,process_err,solution_err\n";
    for (std::size_t i = 0; i < rep.eps_grid.size(); ++i) {
        auto cell = [&](const std::vector<double>& v) {
            return i < v.size() ? format_double(v[i]) : std::string();
        };
        out += format_double(rep.eps_grid[i]) + "," + cell(rep.eta_vals) + "," + cell(rep.xi_vals) +
               "," + cell(rep.gamma_vals) + "," + cell(rep.ell_vals) + "," + cell(rep.rho_vals) +
               "," + cell(rep.process_err) + "," + cell(rep.solution_err) + "\n";
    }
    return out;
}

} // namespace evoproc
