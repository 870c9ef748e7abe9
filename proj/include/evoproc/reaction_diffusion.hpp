#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "evoproc/errors.hpp"
#include "evoproc/operator_family.hpp"
#include "evoproc/semilinear.hpp"
#include "evoproc/spaces.hpp"

namespace evoproc {

/// 1D reduction of the diffusion problem with a time- and space-dependent
/// coefficient: cell-centered finite differences on (0, 1) with Neumann
/// boundary faces, operator -d/dx(a d/dx .) + I. The mass matrix defines
/// the X norm, mass + stiffness the Y norm.
struct ReactionDiffusionConfig {
    int n_cells = 32;
    std::function<double(double t, double x, double eps)> a;
    std::function<double(double t, double x, double eps)> a_grad_x;
    std::function<double(double t, double s, double eps)> f; // scalar reaction term
    double growth_rho = 1.0;
    std::vector<double> eps_list;
    double declared_delta = 1.0;
    std::optional<double> cutoff_radius;
    // probe window used to validate positivity / Hoelder continuity
    double t_probe_lo = 0.0;
    double t_probe_hi = 2.0;
};

struct ProblemBundle {
    SpacePtr space;
    OperatorFamily fam;
    Nonlinearity F;
    // probe diagnostics from the generator
    double a_min = 0.0;
    double a_max = 0.0;
    double holder_probe_const = 0.0;
    double growth_const = 0.0;
};

namespace detail {

inline Matrix rd_mass(int n) {
    const double h = 1.0 / n;
    return Matrix::Identity(n, n) * h;
}

inline Matrix rd_stiffness(int n) {
    const double h = 1.0 / n;
    Matrix S = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        S(i, i) += 1.0 / h;
        S(i - 1, i - 1) += 1.0 / h;
        S(i, i - 1) -= 1.0 / h;
        S(i - 1, i) -= 1.0 / h;
    }
    return S;
}

} // namespace detail

/// Sampled Lipschitz and bound constants of a nonlinearity over the cut-off
/// ball; generators report these, hypothesis checks re-measure them.
struct NonlinearitySample {
    double lip = 0.0;
    double bound = 0.0;
};

template <typename Rng>
inline NonlinearitySample sample_nonlinearity(const Nonlinearity& F,
                                              const std::vector<double>& t_samples, double radius,
                                              int pairs, Rng& rng) {
    const DiscreteSpace& sp = *F.space;
    std::normal_distribution<double> gauss(0.0, 1.0);
    NonlinearitySample out;
    for (int p = 0; p < pairs; ++p) {
        Vector u(sp.dim()), v(sp.dim());
        for (long i = 0; i < sp.dim(); ++i) {
            u(i) = gauss(rng);
            v(i) = gauss(rng);
        }
        u *= radius * std::pow(std::abs(gauss(rng)), 0.5) / std::max(sp.norm(u, NormKind::Y), 1e-300);
        v *= radius * std::pow(std::abs(gauss(rng)), 0.5) / std::max(sp.norm(v, NormKind::Y), 1e-300);
        for (double t : t_samples) {
            const Vector fu = F(t, u), fv = F(t, v);
            out.bound = std::max(out.bound, sp.norm(fu, NormKind::X));
            const double dy = sp.norm(Vector(u - v), NormKind::Y);
            if (dy > 1e-12)
                out.lip = std::max(out.lip, sp.norm(Vector(fu - fv), NormKind::X) / dy);
        }
    }
    return out;
}


inline ProblemBundle build_reaction_diffusion(const ReactionDiffusionConfig& cfg, double eps) {
    if (cfg.n_cells < 2) throw ConfigError("reaction-diffusion mesh needs at least 2 cells");
    if (!cfg.a) throw ConfigError("reaction-diffusion config lacks the coefficient a");
    if (!(cfg.growth_rho >= 1.0 && cfg.growth_rho < 3.0))
        throw ConfigError("growth exponent must lie in [1, 3)");
    const int n = cfg.n_cells;
    const double h = 1.0 / n;

    // probe the coefficient on faces over the time window
    double a_min = std::numeric_limits<double>::infinity(), a_max = 0.0, holder = 0.0;
    {
        std::vector<double> tp;
        for (int i = 0; i <= 16; ++i)
            tp.push_back(cfg.t_probe_lo + (cfg.t_probe_hi - cfg.t_probe_lo) * i / 16.0);
        for (double t : tp)
            for (int fidx = 0; fidx <= n; ++fidx) {
                const double v = cfg.a(t, fidx * h, eps);
                a_min = std::min(a_min, v);
                a_max = std::max(a_max, v);
            }
        if (!(a_min > 0.0))
            throw ConfigError("diffusion coefficient is not positive on the probe grid");
        for (std::size_t i = 0; i < tp.size(); ++i)
            for (std::size_t j = i + 1; j < tp.size(); ++j)
                for (int fidx = 0; fidx <= n; fidx += std::max(1, n / 8)) {
                    const double num =
                        std::abs(cfg.a(tp[i], fidx * h, eps) - cfg.a(tp[j], fidx * h, eps));
                    holder = std::max(
                        num / std::pow(std::abs(tp[i] - tp[j]), cfg.declared_delta), holder);
                }
    }

    ProblemBundle out;
    out.a_min = a_min;
    out.a_max = a_max;
    out.holder_probe_const = holder;
    out.space = std::make_shared<DiscreteSpace>(detail::rd_mass(n),
                                                Matrix(detail::rd_mass(n) + detail::rd_stiffness(n)));

    const auto a_fn = cfg.a;
    out.fam.space = out.space;
    out.fam.epsilon = eps;
    out.fam.eval = [n, h, eps, a_fn](double t) -> Matrix {
        Matrix A = Matrix::Identity(n, n);
        for (int face = 1; face < n; ++face) {
            const double k = a_fn(t, face * h, eps) / (h * h);
            A(face - 1, face - 1) += k;
            A(face, face) += k;
            A(face - 1, face) -= k;
            A(face, face - 1) -= k;
        }
        return A;
    };
    HypothesisConstants hc;
    hc.phi = 3.0 * M_PI / 4.0;
    hc.beta = 0.5;
    hc.delta = cfg.declared_delta;
    hc.holder_const = holder;
    out.fam.declared = hc;

    if (cfg.f) {
        const auto f_fn = cfg.f;
        double growth = 0.0;
        for (double s = -20.0; s <= 20.0; s += 0.5)
            for (double t : {cfg.t_probe_lo, 0.5 * (cfg.t_probe_lo + cfg.t_probe_hi), cfg.t_probe_hi})
                growth = std::max(growth, std::abs(f_fn(t, s, eps)) /
                                              (1.0 + std::pow(std::abs(s), cfg.growth_rho)));
        out.growth_const = growth;

        out.F.space = out.space;
        out.F.eval_raw = [n, f_fn, eps](double t, const Vector& u) -> Vector {
            Vector v(n);
            for (int i = 0; i < n; ++i) v(i) = f_fn(t, u(i), eps);
            return v;
        };
        out.F.scalar_pointwise = [f_fn, eps](double t, double s) { return f_fn(t, s, eps); };
        out.F.cutoff_radius = cfg.cutoff_radius;
        // sampled Lipschitz/bound constants over the working ball
        std::mt19937_64 rng(0x5eedf00dULL);
        const NonlinearitySample ns = sample_nonlinearity(
            out.F, {cfg.t_probe_lo, 0.5 * (cfg.t_probe_lo + cfg.t_probe_hi), cfg.t_probe_hi},
            cfg.cutoff_radius.value_or(1.0), 32, rng);
        out.F.lip_const = ns.lip;
        out.F.bound_const = ns.bound;
    } else {
        out.F.space = out.space;
        out.F.eval_raw = [n](double, const Vector&) { return Vector::Zero(n).eval(); };
        out.F.scalar_pointwise = [](double, double) { return 0.0; };
        out.F.lip_const = 0.0;
        out.F.bound_const = 0.0;
    }
    return out;
}

} // namespace evoproc
