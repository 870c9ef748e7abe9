#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "evoproc/errors.hpp"
#include "evoproc/operator_family.hpp"
#include "evoproc/reaction_diffusion.hpp" // ProblemBundle
#include "evoproc/spaces.hpp"

namespace evoproc {

/// Spectral model of the strongly damped wave system on (0, pi) with
/// Dirichlet Laplacian modes mu_k = k^2. Per mode the first-order system
/// matrix and its fractional powers are closed-form 2x2 blocks; the full
/// operator is block diagonal, acting on interleaved (u_k, v_k) pairs.
struct WaveConfig {
    int n_modes = 16;
    std::function<double(double)> a; // damping/stiffness coefficient a(t)
    std::vector<double> alpha_list;
    std::optional<std::function<double(double, double)>> f; // modal hook, off by default
    double declared_delta = 1.0;
    double t_probe_lo = 0.0;
    double t_probe_hi = 2.0;
};

namespace detail {

/// Real power with exact special cases so the alpha = 1 block reproduces
/// the unfractioned system matrix bitwise.
inline double fracpow(double base, double expo) {
    if (expo == 0.0) return 1.0;
    if (expo == 1.0) return base;
    if (expo == 0.5) return std::sqrt(base);
    if (expo == -1.0) return 1.0 / base;
    return std::pow(base, expo);
}

} // namespace detail

/// 2x2 block of Lambda(t)^alpha for one mode with nu = a(t) mu_k.
inline Eigen::Matrix2d wave_frac_block(double nu, double alpha) {
    Eigen::Matrix2d B;
    B(0, 0) = (1.0 - alpha) * detail::fracpow(nu, alpha / 2.0);
    B(0, 1) = -alpha * detail::fracpow(nu, (alpha - 1.0) / 2.0);
    B(1, 0) = alpha * detail::fracpow(nu, (alpha + 1.0) / 2.0);
    B(1, 1) = (1.0 + alpha) * detail::fracpow(nu, alpha / 2.0);
    return B;
}

/// 2x2 block of Lambda(t)^{-alpha}.
inline Eigen::Matrix2d wave_frac_inverse_block(double nu, double alpha) {
    Eigen::Matrix2d B;
    B(0, 0) = (1.0 + alpha) * detail::fracpow(nu, -alpha / 2.0);
    B(0, 1) = alpha * detail::fracpow(nu, (-1.0 - alpha) / 2.0);
    B(1, 0) = -alpha * detail::fracpow(nu, (1.0 - alpha) / 2.0);
    B(1, 1) = (1.0 - alpha) * detail::fracpow(nu, -alpha / 2.0);
    return B;
}

/// The unfractioned system block [[0, -1], [nu, 2 nu^{1/2}]].
inline Eigen::Matrix2d wave_block(double nu) {
    Eigen::Matrix2d B;
    B(0, 0) = 0.0;
    B(0, 1) = -detail::fracpow(nu, 0.0);
    B(1, 0) = detail::fracpow(nu, 1.0);
    B(1, 1) = 2.0 * detail::fracpow(nu, 0.5);
    return B;
}

inline Matrix wave_lambda_alpha(const WaveConfig& cfg, double alpha, double t) {
    const int n = cfg.n_modes;
    Matrix A = Matrix::Zero(2 * n, 2 * n);
    const double at = cfg.a(t);
    for (int k = 1; k <= n; ++k) {
        const double nu = at * static_cast<double>(k) * k;
        A.block<2, 2>(2 * (k - 1), 2 * (k - 1)) = wave_frac_block(nu, alpha);
    }
    return A;
}

inline Matrix wave_lambda_inverse_alpha(const WaveConfig& cfg, double alpha, double t) {
    const int n = cfg.n_modes;
    Matrix A = Matrix::Zero(2 * n, 2 * n);
    const double at = cfg.a(t);
    for (int k = 1; k <= n; ++k) {
        const double nu = at * static_cast<double>(k) * k;
        A.block<2, 2>(2 * (k - 1), 2 * (k - 1)) = wave_frac_inverse_block(nu, alpha);
    }
    return A;
}

/// Phase space E^{1/2} x E in spectral coordinates: weight mu_k on the
/// displacement component, 1 on the velocity component. Y = X here.
inline SpacePtr wave_space(int n_modes) {
    Matrix G = Matrix::Zero(2 * n_modes, 2 * n_modes);
    for (int k = 1; k <= n_modes; ++k) {
        G(2 * (k - 1), 2 * (k - 1)) = static_cast<double>(k) * k;
        G(2 * (k - 1) + 1, 2 * (k - 1) + 1) = 1.0;
    }
    return std::make_shared<DiscreteSpace>(G, G);
}

inline ProblemBundle build_wave(const WaveConfig& cfg, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("wave fractional exponent must lie in (0, 1]");
    if (cfg.n_modes < 1) throw ConfigError("wave model needs at least one mode");
    if (!cfg.a) throw ConfigError("wave config lacks the coefficient a");

    // probe positivity and Hoelder continuity of a
    double a_min = std::numeric_limits<double>::infinity(), a_max = 0.0, holder = 0.0;
    std::vector<double> tp;
    for (int i = 0; i <= 16; ++i)
        tp.push_back(cfg.t_probe_lo + (cfg.t_probe_hi - cfg.t_probe_lo) * i / 16.0);
    for (double t : tp) {
        const double v = cfg.a(t);
        a_min = std::min(a_min, v);
        a_max = std::max(a_max, v);
    }
    if (!(a_min > 0.0)) throw ConfigError("wave coefficient a is not positive on the probe grid");
    for (std::size_t i = 0; i < tp.size(); ++i)
        for (std::size_t j = i + 1; j < tp.size(); ++j)
            holder = std::max(holder, std::abs(cfg.a(tp[i]) - cfg.a(tp[j])) /
                                          std::pow(std::abs(tp[i] - tp[j]), cfg.declared_delta));

    ProblemBundle out;
    out.a_min = a_min;
    out.a_max = a_max;
    out.holder_probe_const = holder;
    out.space = wave_space(cfg.n_modes);
    out.fam.space = out.space;
    out.fam.epsilon = 1.0 - alpha;
    out.fam.eval = [cfg, alpha](double t) { return wave_lambda_alpha(cfg, alpha, t); };
    HypothesisConstants hc;
    hc.phi = 3.0 * M_PI / 4.0;
    hc.beta = 1.0; // Y = X
    hc.delta = cfg.declared_delta;
    hc.holder_const = holder;
    out.fam.declared = hc;

    const int n = cfg.n_modes;
    out.F.space = out.space;
    if (cfg.f) {
        const auto f_fn = *cfg.f;
        out.F.eval_raw = [n, f_fn](double t, const Vector& z) -> Vector {
            Vector v = Vector::Zero(2 * n);
            for (int k = 0; k < n; ++k) v(2 * k + 1) = f_fn(t, z(2 * k));
            return v;
        };
        out.F.scalar_pointwise = f_fn;
    } else {
        out.F.eval_raw = [n](double, const Vector&) { return Vector::Zero(2 * n).eval(); };
        out.F.scalar_pointwise = [](double, double) { return 0.0; };
    }
    return out;
}

} // namespace evoproc
