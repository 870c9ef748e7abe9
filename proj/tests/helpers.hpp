#pragma once

// Shared fixtures and the module property suites. The acceptance binary
// re-runs the same properties with a fixed seed, so everything here
// reports outcomes instead of asserting.

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "evoproc/evoproc.hpp"
#include "oracles.hpp"

namespace helpers {

using namespace evoproc;

struct PropertyResult {
    bool pass = true;
    std::string what;
};

inline PropertyResult failure(const std::string& msg) { return {false, msg}; }

// ---------------------------------------------------------------- fixtures

inline ReactionDiffusionConfig model_rd_config(int n_cells = 32, double cutoff = 6.0) {
    ReactionDiffusionConfig cfg;
    cfg.n_cells = n_cells;
    cfg.a = [](double t, double x, double eps) { return 2.0 + std::sin(t) + eps * (0.5 + x); };
    cfg.a_grad_x = [](double, double, double eps) { return eps; };
    cfg.f = [](double, double s, double eps) { return std::tanh(s) + eps * std::sin(s); };
    cfg.growth_rho = 1.0;
    cfg.cutoff_radius = cutoff;
    return cfg;
}

inline WaveConfig model_wave_config(int n_modes = 16) {
    WaveConfig cfg;
    cfg.n_modes = n_modes;
    cfg.a = [](double t) { return 1.5 + 0.4 * std::sin(t); };
    cfg.alpha_list = {0.6, 0.8, 0.9, 0.95, 0.99};
    return cfg;
}

inline OperatorFamily scalar_family(std::function<double(double)> a, SpacePtr space) {
    OperatorFamily fam;
    fam.space = std::move(space);
    fam.eval = [a = std::move(a)](double t) { return Matrix::Constant(1, 1, a(t)); };
    return fam;
}

inline Matrix random_spd_similar(int n, std::mt19937_64& rng, double ev_lo = 0.5,
                                 double ev_hi = 30.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix Q(n, n), D = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Q(i, j) = gauss(rng);
    Q = Eigen::HouseholderQR<Matrix>(Q).householderQ();
    std::uniform_real_distribution<double> ev(ev_lo, ev_hi);
    for (int i = 0; i < n; ++i) D(i, i) = ev(rng);
    return Q * D * Q.transpose();
}

// ------------------------------------------------------- property suites

/// op_norm(AB) <= op_norm(A) op_norm(B) across the space's norm pairs.
inline PropertyResult prop_opnorm_submultiplicative(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 6);
        Matrix Gx = random_spd_similar(n, rng, 0.5, 4.0);
        Matrix Gy = random_spd_similar(n, rng, 0.5, 4.0);
        DiscreteSpace sp(0.5 * (Gx + Gx.transpose()), 0.5 * (Gy + Gy.transpose()));
        Matrix A(n, n), B(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                A(i, j) = gauss(rng);
                B(i, j) = gauss(rng);
            }
        for (auto mid : {NormKind::X, NormKind::Y}) {
            for (auto from : {NormKind::X, NormKind::Y}) {
                for (auto to : {NormKind::X, NormKind::Y}) {
                    const double lhs = sp.op_norm(Matrix(A * B), from, to);
                    const double rhs = sp.op_norm(A, mid, to) * sp.op_norm(B, from, mid);
                    if (lhs > rhs * (1.0 + 1e-12)) {
                        std::ostringstream os;
                        os << "submultiplicativity violated: " << lhs << " > " << rhs;
                        return failure(os.str());
                    }
                }
            }
        }
    }
    return {};
}

/// op_norm with identity Grams equals the power-iteration spectral norm.
inline PropertyResult prop_opnorm_matches_power_iteration(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 5);
        DiscreteSpace sp = DiscreteSpace::euclidean(n);
        Matrix A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
        Vector v = Vector::Random(n);
        const Matrix AtA = A.transpose() * A;
        for (int it = 0; it < 2000; ++it) v = (AtA * v).normalized();
        const double power = std::sqrt(v.dot(AtA * v));
        const double got = sp.op_norm(A, NormKind::X, NormKind::X);
        if (std::abs(got - power) > 1e-10 * power)
            return failure("op_norm disagrees with power iteration: " + std::to_string(got) +
                           " vs " + std::to_string(power));
    }
    return {};
}

/// (lambda+A)^{-1} - (mu+A)^{-1} = (mu-lambda)(lambda+A)^{-1}(mu+A)^{-1}.
inline PropertyResult prop_resolvent_identity(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto cfg = model_rd_config(12);
    const ProblemBundle b = build_reaction_diffusion(cfg, 0.05);
    for (int trial = 0; trial < 12; ++trial) {
        const double t = 2.0 * uni(rng);
        const std::complex<double> lam(8.0 * std::abs(uni(rng)), 8.0 * uni(rng));
        const std::complex<double> mu(8.0 * std::abs(uni(rng)) + 0.5, 8.0 * uni(rng));
        const CMatrix Rl = resolvent(b.fam, t, lam);
        const CMatrix Rm = resolvent(b.fam, t, mu);
        const CMatrix lhs = Rl - Rm;
        const CMatrix rhs = (mu - lam) * Rl * Rm;
        const double rel = (lhs - rhs).norm() / std::max(lhs.norm(), 1e-300);
        if (rel > 1e-10)
            return failure("resolvent identity off by rel " + std::to_string(rel));
    }
    return {};
}

/// eta and xi vanish exactly on identical families.
inline PropertyResult prop_gap_functions_vanish() {
    auto cfg = model_rd_config(10);
    const ProblemBundle b = build_reaction_diffusion(cfg, 0.07);
    const std::vector<double> ts{0.0, 0.5, 1.0};
    if (eta(b.fam, b.fam, ts) != 0.0) return failure("eta(fam, fam) != 0");
    if (xi(b.fam, b.fam, ts, ts) != 0.0) return failure("xi(fam, fam) != 0");
    return {};
}

/// | A_eps (lambda+A_eps)^{-1} - A_lim (lambda+A_lim)^{-1} |_X
///   <= 1.1 C |lambda| eta with C assembled from the sector constants.
inline PropertyResult prop_scaled_resolvent_gap(std::uint64_t seed) {
    auto cfg = model_rd_config(16);
    const ProblemBundle be = build_reaction_diffusion(cfg, 0.05);
    const ProblemBundle b0 = build_reaction_diffusion(cfg, 0.0);
    const DiscreteSpace& sp = *be.space;
    const std::vector<double> ts{0.0, 0.7, 1.4};
    const double eta_val = eta(be.fam, b0.fam, ts);
    const SectorReport se = check_sector(be.fam, be.fam.declared->phi, ts, 12);
    const SectorReport s0 = check_sector(b0.fam, b0.fam.declared->phi, ts, 12);
    if (!se.ok || !s0.ok) return failure("sector check failed");
    // |A(l+A)^{-1}| <= 1 + |l| C/(|l|+1) <= 1 + C in each norm
    const double c_bound = sp.embed_const() * (1.0 + se.worst_c_y) * (1.0 + s0.worst_c_x);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double t = 2.0 * uni(rng);
        const double r = std::pow(10.0, -1.0 + 3.0 * uni(rng));
        const std::complex<double> lam = std::polar(r, be.fam.declared->phi * uni(rng));
        const Matrix Ae = be.fam.eval(t), A0 = b0.fam.eval(t);
        const CMatrix Ge = Ae.cast<std::complex<double>>() * resolvent(be.fam, t, lam);
        const CMatrix G0 = A0.cast<std::complex<double>>() * resolvent(b0.fam, t, lam);
        const double lhs = sp.op_norm(CMatrix(Ge - G0), NormKind::X, NormKind::X);
        const double rhs = 1.1 * c_bound * std::abs(lam) * eta_val;
        if (lhs > rhs)
            return failure("scaled resolvent gap " + std::to_string(lhs) + " exceeds bound " +
                           std::to_string(rhs));
    }
    return {};
}

/// interpolation bound: | A_eps(t)A_eps(tau)^{-1} - A_lim(t)A_lim(tau)^{-1} |
///   <= 1.1 (C_h |t-tau|^delta)^{1-theta} xi^theta for theta in {0, 1/2, 1}.
inline PropertyResult prop_ratio_gap_interpolation() {
    auto cfg = model_rd_config(16);
    const ProblemBundle be = build_reaction_diffusion(cfg, 0.05);
    const ProblemBundle b0 = build_reaction_diffusion(cfg, 0.0);
    const DiscreteSpace& sp = *be.space;
    const std::vector<double> fit_ts{0.0, 0.3, 0.6, 0.9, 1.2};
    const double xi_val = xi(be.fam, b0.fam, fit_ts, fit_ts);
    const double delta = 1.0;
    // Hoelder constant of the difference map, fitted on one sample family
    double c_h = 0.0;
    for (double t : fit_ts)
        for (double tau : fit_ts) {
            if (t == tau) continue;
            const Matrix De = (be.fam.eval(t) - be.fam.eval(tau)) * inverse_at(be.fam, tau);
            const Matrix D0 = (b0.fam.eval(t) - b0.fam.eval(tau)) * inverse_at(b0.fam, tau);
            c_h = std::max(c_h, sp.op_norm(Matrix(De - D0), NormKind::X, NormKind::X) /
                                    std::pow(std::abs(t - tau), delta));
        }
    const std::vector<double> check_ts{0.15, 0.45, 0.75, 1.05};
    for (double theta : {0.0, 0.5, 1.0}) {
        for (double t : check_ts)
            for (double tau : check_ts) {
                if (t == tau) continue;
                const Matrix D = be.fam.eval(t) * inverse_at(be.fam, tau) -
                                 b0.fam.eval(t) * inverse_at(b0.fam, tau);
                const double lhs = sp.op_norm(D, NormKind::X, NormKind::X);
                const double rhs = 1.1 *
                                   std::pow(c_h * std::pow(std::abs(t - tau), delta), 1.0 - theta) *
                                   std::pow(xi_val, theta);
                if (lhs > rhs) {
                    std::ostringstream os;
                    os << "ratio-gap interpolation failed at theta=" << theta << ": " << lhs
                       << " > " << rhs;
                    return failure(os.str());
                }
            }
    }
    return {};
}

/// t^{1-beta} |T(t)|_{X->Y} stays bounded towards t -> 0.
inline PropertyResult prop_semigroup_xy_bound() {
    auto cfg = model_rd_config(24);
    const ProblemBundle b = build_reaction_diffusion(cfg, 0.0);
    SemigroupEvaluator ev(b.fam);
    const double beta = 0.5;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double t : {1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0}) {
        const double v = std::pow(t, 1.0 - beta) *
                         b.space->op_norm(ev.semigroup_at(0.4, t), NormKind::X, NormKind::Y);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(std::isfinite(hi))) return failure("X->Y semigroup bound not finite");
    if (hi > 50.0 * std::max(lo, 1e-6))
        return failure("t^{1-beta} |T(t)|_{X,Y} drifts: hi/lo = " + std::to_string(hi / lo));
    return {};
}

/// |U(t,tau)|_X <= C e^{K(t-tau)} and (t-tau)^{1-beta} |U|_{X->Y} bounded.
inline PropertyResult prop_process_growth_bounds(const EvolutionProcess& proc, double beta) {
    const auto& nodes = proc.nodes();
    const DiscreteSpace& sp = proc.space();
    double worst_x = 0.0, worst_xy = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const Matrix u = proc.at(static_cast<int>(i), 0);
        worst_x = std::max(worst_x, sp.op_norm(u, NormKind::X, NormKind::X));
        worst_xy = std::max(worst_xy, std::pow(nodes[i] - nodes[0], 1.0 - beta) *
                                          sp.op_norm(u, NormKind::X, NormKind::Y));
    }
    if (!std::isfinite(worst_x) || !std::isfinite(worst_xy))
        return failure("process growth constants not finite");
    if (worst_x > 1e3 || worst_xy > 1e4)
        return failure("process growth constants implausibly large: " + std::to_string(worst_x) +
                       ", " + std::to_string(worst_xy));
    return {};
}

/// Picard residuals decrease geometrically once below the first-iterate scale.
inline PropertyResult prop_picard_contraction(const std::vector<std::vector<double>>& log) {
    for (const auto& window : log) {
        if (window.size() < 3) continue;
        for (std::size_t i = 2; i + 1 < window.size(); ++i) {
            if (window[i] <= 0.0) break;
            if (window[i + 1] > 0.75 * window[i])
                return failure("Picard residual not contracting: " + std::to_string(window[i]) +
                               " -> " + std::to_string(window[i + 1]));
        }
    }
    return {};
}

/// (t-tau)^{1-beta} |u(t)|_Y / (1 + |u_tau|_Y) bounded over the grid.
inline PropertyResult prop_solution_growth(const Trajectory& traj, const DiscreteSpace& sp,
                                           double beta) {
    const double denom = 1.0 + sp.norm(traj.initial, NormKind::Y);
    double worst = 0.0;
    for (std::size_t i = 1; i < traj.nodes.size(); ++i)
        worst = std::max(worst, std::pow(traj.nodes[i] - traj.nodes[0], 1.0 - beta) *
                                    traj.y_norms[i] / denom);
    if (!std::isfinite(worst) || worst > 1e3)
        return failure("solution growth constant implausible: " + std::to_string(worst));
    return {};
}

} // namespace helpers
