#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "evoproc/errors.hpp"
#include "evoproc/parallel.hpp"
#include "evoproc/spaces.hpp"

namespace evoproc {

/// Declared sector/regularity constants of a family, as produced by a
/// problem generator. Estimators re-measure them; reports carry both.
struct HypothesisConstants {
    double phi = 3.0 * M_PI / 4.0; // sector half-angle, in (pi/2, pi)
    double c_sector = 0.0;         // constant in the resolvent decay estimate (0 = unknown)
    double beta = 1.0;             // exponent in the X->Y resolvent estimate, (0,1]
    double delta = 1.0;            // Hoelder exponent of t -> A(t)A(s)^{-1}, (0,1]
    double holder_const = 0.0;     // constant paired with delta (0 = unknown)

    void validate() const {
        if (!(phi > M_PI / 2.0 && phi < M_PI)) throw DomainError("phi must lie in (pi/2, pi)");
        if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("beta must lie in (0, 1]");
        if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
    }
};

/// The map t -> A(t) as a dense matrix-valued function, tagged with the
/// perturbation parameter (0 designates the limiting family). Evaluation
/// must be pure and reentrant; estimators run parallel maps over sample
/// grids and reduce in index order.
struct OperatorFamily {
    SpacePtr space;
    std::function<Matrix(double)> eval;
    double epsilon = 0.0;
    std::optional<HypothesisConstants> declared;

    Matrix operator()(double t) const { return eval(t); }
};

namespace detail {

inline double singular_rcond_threshold() { return 100.0 * std::numeric_limits<double>::epsilon(); }

} // namespace detail

/// (lambda I + A(t))^{-1} by dense LU. Systems whose reciprocal condition
/// estimate falls below 100*eps are reported as numerically singular.
inline CMatrix resolvent(const OperatorFamily& fam, double t, std::complex<double> lambda) {
    const Matrix A = fam.eval(t);
    const long n = A.rows();
    CMatrix B = A.cast<std::complex<double>>();
    B.diagonal().array() += lambda;
    Eigen::PartialPivLU<CMatrix> lu(B);
    if (!(lu.rcond() > detail::singular_rcond_threshold()))
        throw SingularSystemError("resolvent system numerically singular", t, lambda);
    return lu.solve(CMatrix::Identity(n, n));
}

inline Matrix inverse_at(const OperatorFamily& fam, double t) {
    const Matrix A = fam.eval(t);
    Eigen::PartialPivLU<Matrix> lu(A);
    if (!(lu.rcond() > detail::singular_rcond_threshold()))
        throw SingularSystemError("A(t) numerically singular", t, 0.0);
    return lu.solve(Matrix::Identity(A.rows(), A.cols()));
}

struct SectorReport {
    bool ok = false;
    double worst_c_x = std::numeric_limits<double>::quiet_NaN();
    double worst_c_y = std::numeric_limits<double>::quiet_NaN();
    double worst_c_xy_beta = std::numeric_limits<double>::quiet_NaN();
    double phi = 0.0;
    double beta = 1.0;
    // set when ok == false
    double failed_t = 0.0;
    std::complex<double> failed_lambda{0.0, 0.0};
    std::string failure;
};

/// Sample lambda on the two sector rays r e^{+-i phi} (geometric in r over
/// [1e-3, 1e3]) plus lambda = 0, and take worst cases of the scaled
/// resolvent norms in L(X), L(Y) and L(X,Y).
inline SectorReport check_sector(const OperatorFamily& fam, double phi,
                                 const std::vector<double>& t_samples,
                                 int lambda_samples_per_ray = 20) {
    if (!(phi > M_PI / 2.0 && phi < M_PI)) throw DomainError("phi must lie in (pi/2, pi)");
    if (t_samples.empty()) throw DomainError("check_sector needs at least one t sample");
    if (lambda_samples_per_ray < 1) throw DomainError("lambda_samples_per_ray must be positive");

    const double beta = fam.declared ? fam.declared->beta : 1.0;

    std::vector<std::complex<double>> lambdas;
    lambdas.emplace_back(0.0, 0.0);
    const double r_lo = 1e-3, r_hi = 1e3;
    for (int k = 0; k < lambda_samples_per_ray; ++k) {
        const double f = lambda_samples_per_ray == 1
                             ? 0.5
                             : static_cast<double>(k) / (lambda_samples_per_ray - 1);
        const double r = r_lo * std::pow(r_hi / r_lo, f);
        lambdas.push_back(std::polar(r, phi));
        lambdas.push_back(std::polar(r, -phi));
    }

    SectorReport rep;
    rep.phi = phi;
    rep.beta = beta;

    struct Cell {
        double cx = 0.0, cy = 0.0, cxy = 0.0;
        bool failed = false;
        double t = 0.0;
        std::complex<double> lambda;
        std::string what;
    };
    std::vector<Cell> cells(t_samples.size() * lambdas.size());
    const DiscreteSpace& sp = *fam.space;

    parallel_for(cells.size(), [&](std::size_t idx) {
        const double t = t_samples[idx / lambdas.size()];
        const std::complex<double> lam = lambdas[idx % lambdas.size()];
        Cell& c = cells[idx];
        c.t = t;
        c.lambda = lam;
        try {
            const CMatrix R = resolvent(fam, t, lam);
            const double mod = std::abs(lam);
            c.cx = (mod + 1.0) * sp.op_norm(R, NormKind::X, NormKind::X);
            c.cy = (mod + 1.0) * sp.op_norm(R, NormKind::Y, NormKind::Y);
            c.cxy = (std::pow(mod, beta) + 1.0) * sp.op_norm(R, NormKind::X, NormKind::Y);
        } catch (const Error& e) {
            c.failed = true;
            c.what = e.what();
        }
    });

    double cx = 0.0, cy = 0.0, cxy = 0.0;
    for (const Cell& c : cells) {
        if (c.failed) {
            rep.ok = false;
            rep.failed_t = c.t;
            rep.failed_lambda = c.lambda;
            rep.failure = c.what;
            return rep;
        }
        cx = std::max(cx, c.cx);
        cy = std::max(cy, c.cy);
        cxy = std::max(cxy, c.cxy);
    }
    rep.worst_c_x = cx;
    rep.worst_c_y = cy;
    rep.worst_c_xy_beta = cxy;
    rep.ok = std::isfinite(cx) && std::isfinite(cy) && std::isfinite(cxy);
    return rep;
}

struct HolderFit {
    double delta_fit = std::numeric_limits<double>::infinity();
    double holder_const = 0.0;
    bool autonomous = false;
};

namespace detail {

/// Least-squares slope/intercept of y against x.
inline std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return {0.0, y.empty() ? 0.0 : sy / n};
    const double slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n;
    return {slope, intercept};
}

} // namespace detail

/// Fit the Hoelder exponent of t -> A(t)A(tau)^{-1} in L(X) from all grid
/// pairs. Autonomous families (all pairwise differences vanish) return an
/// infinite-exponent sentinel instead of fitting noise.
inline HolderFit estimate_delta(const OperatorFamily& fam, const std::vector<double>& t_grid,
                                double tau) {
    if (t_grid.size() < 4) throw DomainError("estimate_delta needs at least 4 grid points");
    const Matrix Ainv = inverse_at(fam, tau);
    const DiscreteSpace& sp = *fam.space;

    std::vector<Matrix> A_at(t_grid.size());
    parallel_for(t_grid.size(), [&](std::size_t i) { A_at[i] = fam.eval(t_grid[i]); });

    std::vector<double> logs_dt, logs_norm;
    double scale = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        scale = std::max(scale, sp.op_norm(Matrix(A_at[i] * Ainv), NormKind::X, NormKind::X));
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        for (std::size_t j = i + 1; j < t_grid.size(); ++j) {
            const double dt = std::abs(t_grid[i] - t_grid[j]);
            if (dt == 0.0) continue;
            const double v = sp.op_norm(Matrix((A_at[i] - A_at[j]) * Ainv), NormKind::X, NormKind::X);
            if (v <= 1e-14 * std::max(scale, 1.0)) continue;
            logs_dt.push_back(std::log(dt));
            logs_norm.push_back(std::log(v));
        }
    }
    HolderFit fit;
    if (logs_dt.empty()) {
        fit.autonomous = true;
        return fit;
    }
    auto [slope, intercept] = detail::fit_line(logs_dt, logs_norm);
    fit.delta_fit = slope;
    fit.holder_const = std::exp(intercept);
    return fit;
}

/// sup over t samples of | A_eps(t)^{-1} - A_lim(t)^{-1} | in L(X, Y).
inline double eta(const OperatorFamily& fam_eps, const OperatorFamily& fam_0,
                  const std::vector<double>& t_samples) {
    if (!same_space(fam_eps.space, fam_0.space))
        throw GridMismatchError("eta: families must share the same space");
    const DiscreteSpace& sp = *fam_eps.space;
    std::vector<double> vals(t_samples.size());
    parallel_for(t_samples.size(), [&](std::size_t i) {
        const Matrix D = inverse_at(fam_eps, t_samples[i]) - inverse_at(fam_0, t_samples[i]);
        vals[i] = sp.op_norm(D, NormKind::X, NormKind::Y);
    });
    double m = 0.0;
    for (double v : vals) m = std::max(m, v);
    return m;
}

/// sup over the (t, tau) sample grid of
/// | A_eps(t)A_eps(tau)^{-1} - A_lim(t)A_lim(tau)^{-1} | in L(X).
inline double xi(const OperatorFamily& fam_eps, const OperatorFamily& fam_0,
                 const std::vector<double>& t_samples, const std::vector<double>& tau_samples) {
    if (!same_space(fam_eps.space, fam_0.space))
        throw GridMismatchError("xi: families must share the same space");
    const DiscreteSpace& sp = *fam_eps.space;
    std::vector<double> vals(t_samples.size() * tau_samples.size());
    parallel_for(vals.size(), [&](std::size_t idx) {
        const double t = t_samples[idx / tau_samples.size()];
        const double tau = tau_samples[idx % tau_samples.size()];
        const Matrix D = fam_eps.eval(t) * inverse_at(fam_eps, tau) -
                         fam_0.eval(t) * inverse_at(fam_0, tau);
        vals[idx] = sp.op_norm(D, NormKind::X, NormKind::X);
    });
    double m = 0.0;
    for (double v : vals) m = std::max(m, v);
    return m;
}

} // namespace evoproc
