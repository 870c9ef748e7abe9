#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evoproc/contour.hpp"
#include "evoproc/damped_wave.hpp"
#include "evoproc/errors.hpp"
#include "evoproc/expression.hpp"
#include "evoproc/io.hpp"
#include "evoproc/reaction_diffusion.hpp"
#include "evoproc/time_grid.hpp"

namespace evoproc {

/// Parsed experiment description. Field-by-field schema documented in the
/// README; every run report embeds config_hash for provenance.
struct ExperimentConfig {
    std::string kind; // "reaction-diffusion" | "wave" | "scalar"
    std::uint64_t seed = 0x5eed5eed5eedull;
    double theta = 0.9;

    int n_cells = 32;
    int n_modes = 16;

    std::string a_expr;
    std::string a_grad_expr;
    std::string f_expr; // empty = linear problem
    std::string initial_expr = "cos(pi * x)";
    double growth_rho = 1.0;

    std::vector<double> eps_list;   // wave: filled as 1 - alpha
    std::vector<double> alpha_list; // wave only

    TimeGrid grid;
    Contour contour;

    double beta = 1.0;
    double declared_delta = 1.0;
    double hyp_t_lo = 0.0, hyp_t_hi = 2.0;
    int hyp_t_samples = 7;
    int lambda_per_ray = 20;

    std::optional<double> cutoff_radius;

    PhiOptions phi;
    SemilinearOptions semilinear;

    double reference_time = 1.0;

    double absorbing_horizon = 20.0;
    int absorbing_n_initial = 10;
    double absorbing_initial_norm = 10.0;
    double absorbing_s_range = 50.0;
    int absorbing_n_steps = 96;

    std::string config_hash; // hash of the raw file bytes
    std::string source_path;
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text, const std::string& source_name) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("JSON parse error in ") + source_name + ": " + e.what(),
                          static_cast<std::ptrdiff_t>(e.byte));
    }
    ExperimentConfig cfg;
    cfg.config_hash = fnv1a_hex(text);
    cfg.source_path = source_name;
    try {
        cfg.kind = j.at("kind").get<std::string>();
        if (cfg.kind != "reaction-diffusion" && cfg.kind != "wave" && cfg.kind != "scalar")
            throw ConfigError("unknown problem kind '" + cfg.kind + "'");
        cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
        cfg.theta = detail::get_or<double>(j, "theta", cfg.theta);
        if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");

        if (j.contains("space")) {
            const auto& s = j.at("space");
            cfg.n_cells = detail::get_or<int>(s, "n_cells", cfg.n_cells);
            cfg.n_modes = detail::get_or<int>(s, "n_modes", cfg.n_modes);
        }
        if (j.contains("coefficients")) {
            const auto& c = j.at("coefficients");
            cfg.a_expr = detail::get_or<std::string>(c, "a", "");
            cfg.a_grad_expr = detail::get_or<std::string>(c, "a_grad_x", "");
            cfg.f_expr = detail::get_or<std::string>(c, "f", "");
            cfg.growth_rho = detail::get_or<double>(c, "growth_rho", cfg.growth_rho);
        }
        if (cfg.a_expr.empty()) throw ConfigError("coefficients.a is required");
        ExprParser::parse(cfg.a_expr); // surface syntax errors at load time
        if (!cfg.a_grad_expr.empty()) ExprParser::parse(cfg.a_grad_expr);
        if (!cfg.f_expr.empty()) ExprParser::parse(cfg.f_expr);

        if (cfg.kind == "wave") {
            cfg.alpha_list = j.at("alpha_list").get<std::vector<double>>();
            for (double a : cfg.alpha_list)
                if (!(a > 0.0 && a <= 1.0)) throw ConfigError("alpha values must lie in (0, 1]");
            cfg.eps_list.clear();
            for (double a : cfg.alpha_list) cfg.eps_list.push_back(1.0 - a);
        } else {
            cfg.eps_list = j.at("eps_list").get<std::vector<double>>();
            for (double e : cfg.eps_list)
                if (!(e > 0.0)) throw ConfigError("eps values must be positive");
        }

        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            cfg.grid.tau = detail::get_or<double>(g, "tau", 0.0);
            cfg.grid.t_end = detail::get_or<double>(g, "t_end", 1.0);
            cfg.grid.n_steps = detail::get_or<int>(g, "n_steps", 64);
            const std::string rule = detail::get_or<std::string>(g, "rule", "graded");
            if (rule == "graded")
                cfg.grid.rule = GridRule::Graded;
            else if (rule == "uniform")
                cfg.grid.rule = GridRule::Uniform;
            else
                throw ConfigError("grid rule must be 'uniform' or 'graded'");
            cfg.grid.grading_q = detail::get_or<double>(g, "grading_q", 2.0);
            cfg.grid.validate();
        }
        if (j.contains("contour")) {
            const auto& c = j.at("contour");
            cfg.contour.phi = detail::get_or<double>(c, "phi", cfg.contour.phi);
            cfg.contour.nodes_per_ray =
                detail::get_or<int>(c, "nodes_per_ray", cfg.contour.nodes_per_ray);
            cfg.contour.panel_ratio =
                detail::get_or<double>(c, "panel_ratio", cfg.contour.panel_ratio);
            cfg.contour.radius_scale =
                detail::get_or<double>(c, "radius_scale", cfg.contour.radius_scale);
            cfg.contour.radius_max = detail::get_or<double>(c, "radius_max", 0.0);
            const std::string q =
                detail::get_or<std::string>(c, "quadrature", "composite-gauss-legendre");
            if (q == "composite-gauss-legendre")
                cfg.contour.quadrature = QuadratureKind::CompositeGaussLegendre;
            else if (q == "tanh-sinh")
                cfg.contour.quadrature = QuadratureKind::TanhSinh;
            else
                throw ConfigError("unknown quadrature kind '" + q + "'");
            cfg.contour.validate();
        }
        if (j.contains("hypotheses")) {
            const auto& h = j.at("hypotheses");
            cfg.beta = detail::get_or<double>(h, "beta", cfg.kind == "reaction-diffusion" ? 0.5 : 1.0);
            cfg.declared_delta = detail::get_or<double>(h, "delta", 1.0);
            if (h.contains("t_window")) {
                cfg.hyp_t_lo = h.at("t_window").at(0).get<double>();
                cfg.hyp_t_hi = h.at("t_window").at(1).get<double>();
            }
            cfg.hyp_t_samples = detail::get_or<int>(h, "t_samples", 7);
            cfg.lambda_per_ray = detail::get_or<int>(h, "lambda_per_ray", 20);
        } else if (cfg.kind == "reaction-diffusion") {
            cfg.beta = 0.5;
        }
        if (j.contains("nonlinearity")) {
            const auto& nl = j.at("nonlinearity");
            if (nl.contains("cutoff_radius")) cfg.cutoff_radius = nl.at("cutoff_radius").get<double>();
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            const std::string pm = detail::get_or<std::string>(s, "phi_method", "product-integration");
            if (pm == "product-integration")
                cfg.phi.method = PhiMethod::ProductIntegration;
            else if (pm == "neumann")
                cfg.phi.method = PhiMethod::Neumann;
            else
                throw ConfigError("unknown phi method '" + pm + "'");
            cfg.phi.tol = detail::get_or<double>(s, "phi_tol", cfg.phi.tol);
            cfg.phi.max_iter = detail::get_or<int>(s, "phi_max_iter", cfg.phi.max_iter);
            cfg.semilinear.tol = detail::get_or<double>(s, "picard_tol", cfg.semilinear.tol);
            cfg.semilinear.max_iter = detail::get_or<int>(s, "picard_max_iter", cfg.semilinear.max_iter);
            cfg.semilinear.picard_window =
                detail::get_or<double>(s, "picard_window", cfg.semilinear.picard_window);
        }
        cfg.initial_expr = detail::get_or<std::string>(j, "initial", cfg.initial_expr);
        ExprParser::parse(cfg.initial_expr);
        if (j.contains("rates"))
            cfg.reference_time = detail::get_or<double>(j.at("rates"), "reference_time", 1.0);
        if (j.contains("absorbing")) {
            const auto& a = j.at("absorbing");
            cfg.absorbing_horizon = detail::get_or<double>(a, "horizon", cfg.absorbing_horizon);
            cfg.absorbing_n_initial = detail::get_or<int>(a, "n_initial", cfg.absorbing_n_initial);
            cfg.absorbing_initial_norm =
                detail::get_or<double>(a, "initial_norm", cfg.absorbing_initial_norm);
            cfg.absorbing_s_range = detail::get_or<double>(a, "s_range", cfg.absorbing_s_range);
            cfg.absorbing_n_steps = detail::get_or<int>(a, "n_steps", cfg.absorbing_n_steps);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config ") + source_name + ": " + e.what());
    }
    cfg.semilinear.beta = cfg.beta;
    cfg.phi.delta = cfg.declared_delta;
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path), path.string());
}

/// Instantiate the problem family member for one parameter value
/// (eps for the parabolic kinds, eps = 1 - alpha for the wave kind).
inline ProblemBundle make_bundle(const ExperimentConfig& cfg, double eps) {
    if (cfg.kind == "reaction-diffusion") {
        ReactionDiffusionConfig rd;
        rd.n_cells = cfg.n_cells;
        rd.growth_rho = cfg.growth_rho;
        rd.declared_delta = cfg.declared_delta;
        rd.cutoff_radius = cfg.cutoff_radius;
        rd.t_probe_lo = cfg.hyp_t_lo;
        rd.t_probe_hi = cfg.hyp_t_hi;
        const Expr a = ExprParser::parse(cfg.a_expr);
        rd.a = [a](double t, double x, double e) {
            ExprEnv env;
            env.t = t;
            env.x = x;
            env.eps = e;
            return a(env);
        };
        if (!cfg.a_grad_expr.empty()) {
            const Expr g = ExprParser::parse(cfg.a_grad_expr);
            rd.a_grad_x = [g](double t, double x, double e) {
                ExprEnv env;
                env.t = t;
                env.x = x;
                env.eps = e;
                return g(env);
            };
        }
        if (!cfg.f_expr.empty()) {
            const Expr f = ExprParser::parse(cfg.f_expr);
            rd.f = [f](double t, double s, double e) {
                ExprEnv env;
                env.t = t;
                env.s = s;
                env.eps = e;
                return f(env);
            };
        }
        ProblemBundle b = build_reaction_diffusion(rd, eps);
        if (b.fam.declared) b.fam.declared->beta = cfg.beta;
        return b;
    }
    if (cfg.kind == "wave") {
        WaveConfig wc;
        wc.n_modes = cfg.n_modes;
        wc.declared_delta = cfg.declared_delta;
        wc.t_probe_lo = cfg.hyp_t_lo;
        wc.t_probe_hi = cfg.hyp_t_hi;
        const Expr a = ExprParser::parse(cfg.a_expr);
        wc.a = [a](double t) {
            ExprEnv env;
            env.t = t;
            return a(env);
        };
        if (!cfg.f_expr.empty()) {
            const Expr f = ExprParser::parse(cfg.f_expr);
            wc.f = [f](double t, double s) {
                ExprEnv env;
                env.t = t;
                env.s = s;
                return f(env);
            };
        }
        return build_wave(wc, 1.0 - eps);
    }
    if (cfg.kind == "scalar") {
        ProblemBundle b;
        b.space = std::make_shared<DiscreteSpace>(DiscreteSpace::euclidean(1));
        const Expr a = ExprParser::parse(cfg.a_expr);
        const auto a_fn = [a, eps](double t) {
            ExprEnv env;
            env.t = t;
            env.eps = eps;
            return a(env);
        };
        for (int i = 0; i <= 16; ++i) {
            const double t = cfg.hyp_t_lo + (cfg.hyp_t_hi - cfg.hyp_t_lo) * i / 16.0;
            if (!(a_fn(t) > 0.0))
                throw ConfigError("scalar coefficient is not positive on the probe grid");
        }
        b.fam.space = b.space;
        b.fam.epsilon = eps;
        b.fam.eval = [a_fn](double t) { return Matrix::Constant(1, 1, a_fn(t)); };
        HypothesisConstants hc;
        hc.beta = cfg.beta;
        hc.delta = cfg.declared_delta;
        b.fam.declared = hc;
        b.F.space = b.space;
        if (!cfg.f_expr.empty()) {
            const Expr f = ExprParser::parse(cfg.f_expr);
            b.F.eval_raw = [f, eps](double t, const Vector& u) -> Vector {
                ExprEnv env;
                env.t = t;
                env.s = u(0);
                env.eps = eps;
                return Vector::Constant(1, f(env));
            };
            b.F.scalar_pointwise = [f, eps](double t, double s) {
                ExprEnv env;
                env.t = t;
                env.s = s;
                env.eps = eps;
                return f(env);
            };
        } else {
            b.F.eval_raw = [](double, const Vector&) { return Vector::Zero(1).eval(); };
            b.F.scalar_pointwise = [](double, double) { return 0.0; };
        }
        b.F.cutoff_radius = cfg.cutoff_radius;
        return b;
    }
    throw ConfigError("unknown problem kind '" + cfg.kind + "'");
}

/// Evaluate the initial-state expression on the bundle's coordinates.
inline Vector make_initial_state(const ExperimentConfig& cfg, const ProblemBundle& bundle) {
    const Expr init = ExprParser::parse(cfg.initial_expr);
    const long dim = bundle.space->dim();
    Vector u(dim);
    if (cfg.kind == "reaction-diffusion") {
        const double h = 1.0 / cfg.n_cells;
        for (long i = 0; i < dim; ++i) {
            ExprEnv env;
            env.x = (i + 0.5) * h;
            u(i) = init(env);
        }
    } else if (cfg.kind == "wave") {
        // modal initial data: x plays the role of the mode number
        for (long i = 0; i < dim; ++i) {
            ExprEnv env;
            env.x = static_cast<double>(i / 2 + 1);
            u(i) = (i % 2 == 0) ? init(env) : 0.0;
        }
    } else {
        ExprEnv env;
        env.x = 0.0;
        u(0) = init(env);
    }
    return u;
}

} // namespace evoproc
