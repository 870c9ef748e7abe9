#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "evoproc/contour.hpp"
#include "evoproc/errors.hpp"
#include "evoproc/operator_family.hpp"

namespace evoproc {

/// Frozen-time analytic semigroup e^{-A(tau) t} evaluated by quadrature of
/// the sector contour integral of the resolvent.
///
/// Per frozen time the Schur form of A(tau) is cached, so every contour node
/// costs one triangular inverse. The batch entry point reuses the node
/// resolvents for all requested times at that tau, which makes a whole
/// process assembly cost little more than one semigroup evaluation per tau.
///
/// Values are cached per exact (tau, t) float bits; identical keys always
/// return the identical matrix. Distinct keys may be evaluated concurrently,
/// but for run-to-run determinism a given tau should be batched by one
/// thread.
class SemigroupEvaluator {
public:
    explicit SemigroupEvaluator(OperatorFamily fam, Contour contour = {})
        : fam_(std::move(fam)), contour_(contour) {
        contour_.validate();
    }

    const OperatorFamily& family() const { return fam_; }
    const Contour& contour() const { return contour_; }

    /// T_{-A(tau)}(t). The t = 0 case short-circuits to the identity; the
    /// integral representation is singular there.
    Matrix operator()(double tau, double t) const { return semigroup_at(tau, t); }

    Matrix semigroup_at(double tau, double t) const {
        std::vector<Matrix> out = semigroup_batch(tau, {t});
        return out.front();
    }

    /// All T_{-A(tau)}(t) for t in ts, sharing one set of node resolvents.
    std::vector<Matrix> semigroup_batch(double tau, const std::vector<double>& ts) const {
        const long n = fam_.space->dim();
        std::vector<Matrix> out(ts.size());
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double t = ts[i];
            if (t < 0.0) throw DomainError("semigroup_at requires t >= 0");
            if (t == 0.0) {
                out[i] = Matrix::Identity(n, n);
                continue;
            }
            const Key key{bits(tau), bits(t)};
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end())
                out[i] = it->second;
            else
                missing.push_back(i);
        }
        if (missing.empty()) return out;

        double t_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : missing) t_min = std::min(t_min, ts[i]);

        const Frozen& f = frozen(tau);
        const NodeSet nodes = build_nodes(f, t_min);
        for (std::size_t i : missing) {
            Matrix value = accumulate(f, nodes, ts[i], tau, /*apply_generator=*/false);
            const Key key{bits(tau), bits(ts[i])};
            std::lock_guard<std::mutex> lock(mutex_);
            auto [it, inserted] = cache_.emplace(key, std::move(value));
            out[i] = it->second;
        }
        return out;
    }

    /// A(tau) T_{-A(tau)}(t), t > 0 strictly. Computed as the matrix
    /// product; the contour form is exposed separately as a cross-check.
    Matrix a_semigroup_at(double tau, double t) const {
        if (!(t > 0.0)) throw DomainError("a_semigroup_at requires t > 0");
        return fam_.eval(tau) * semigroup_at(tau, t);
    }

    /// Contour-integral route for A(tau) T_{-A(tau)}(t), using
    /// A (lambda + A)^{-1} = I - lambda (lambda + A)^{-1} on each node.
    Matrix a_semigroup_contour(double tau, double t) const {
        if (!(t > 0.0)) throw DomainError("a_semigroup_contour requires t > 0");
        const Frozen& f = frozen(tau);
        const NodeSet nodes = build_nodes(f, t);
        return accumulate(f, nodes, t, tau, /*apply_generator=*/true);
    }

    std::size_t cache_size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.size();
    }

private:
    using Key = std::pair<std::uint64_t, std::uint64_t>;

    struct Frozen {
        CMatrix schur_u;       // unitary factor
        CMatrix schur_t;       // upper triangular factor
        double spectral_floor; // smallest eigenvalue magnitude
    };

    struct NodeSet {
        std::vector<double> r, w;
        // resolvents (r e^{+i phi} + T)^{-1} and (r e^{-i phi} + T)^{-1}
        std::vector<CMatrix> up, dn;
    };

    static std::uint64_t bits(double x) {
        std::uint64_t u;
        std::memcpy(&u, &x, sizeof u);
        return u;
    }

    const Frozen& frozen(double tau) const {
        const std::uint64_t key = bits(tau);
        {
            std::lock_guard<std::mutex> lock(frozen_mutex_);
            auto it = frozen_.find(key);
            if (it != frozen_.end()) return it->second;
        }
        Frozen f;
        const Matrix A = fam_.eval(tau);
        Eigen::ComplexSchur<CMatrix> schur(A.cast<std::complex<double>>());
        if (schur.info() != Eigen::Success)
            throw Error("Schur factorization failed at tau=" + std::to_string(tau));
        f.schur_u = schur.matrixU();
        f.schur_t = schur.matrixT();
        double floor = std::numeric_limits<double>::infinity();
        for (long i = 0; i < f.schur_t.rows(); ++i)
            floor = std::min(floor, std::abs(f.schur_t(i, i)));
        f.spectral_floor = floor;
        std::lock_guard<std::mutex> lock(frozen_mutex_);
        auto [it, inserted] = frozen_.emplace(key, std::move(f));
        return it->second;
    }

    NodeSet build_nodes(const Frozen& f, double t_min) const {
        NodeSet ns;
        quadrature::ray_rule(contour_.radius_at(t_min), 0.2 * f.spectral_floor, contour_, ns.r,
                             ns.w);
        const long n = f.schur_t.rows();
        const CMatrix I = CMatrix::Identity(n, n);
        ns.up.resize(ns.r.size());
        ns.dn.resize(ns.r.size());
        const std::complex<double> dir_up = std::polar(1.0, contour_.phi);
        const std::complex<double> dir_dn = std::polar(1.0, -contour_.phi);
        CMatrix B(n, n);
        for (std::size_t k = 0; k < ns.r.size(); ++k) {
            for (int ray = 0; ray < 2; ++ray) {
                const std::complex<double> lambda = ns.r[k] * (ray == 0 ? dir_up : dir_dn);
                B = f.schur_t;
                B.diagonal().array() += lambda;
                double diag_floor = std::numeric_limits<double>::infinity();
                for (long i = 0; i < n; ++i) diag_floor = std::min(diag_floor, std::abs(B(i, i)));
                if (!(diag_floor > 0.0))
                    throw SingularSystemError("resolvent singular on contour node",
                                              std::numeric_limits<double>::quiet_NaN(), lambda);
                (ray == 0 ? ns.up[k] : ns.dn[k]) = B.triangularView<Eigen::Upper>().solve(I);
            }
        }
        return ns;
    }

    Matrix accumulate(const Frozen& f, const NodeSet& nodes, double t, double tau,
                      bool apply_generator) const {
        const long n = f.schur_t.rows();
        const std::complex<double> dir_up = std::polar(1.0, contour_.phi);
        const std::complex<double> dir_dn = std::polar(1.0, -contour_.phi);
        const double cut = contour_.radius_scale / (t * std::abs(std::cos(contour_.phi)));

        CMatrix acc = CMatrix::Zero(n, n);
        const CMatrix I = CMatrix::Identity(n, n);
        for (std::size_t k = 0; k < nodes.r.size(); ++k) {
            // nodes beyond the per-time truncation radius carry weight below
            // e^{-radius_scale}; skipping them only drops that tail
            if (nodes.r[k] > cut) continue;
            const std::complex<double> lam_up = nodes.r[k] * dir_up;
            const std::complex<double> lam_dn = nodes.r[k] * dir_dn;
            if (apply_generator) {
                acc += (nodes.w[k] * std::exp(lam_up * t) * dir_up) * (I - lam_up * nodes.up[k]);
                acc -= (nodes.w[k] * std::exp(lam_dn * t) * dir_dn) * (I - lam_dn * nodes.dn[k]);
            } else {
                acc += (nodes.w[k] * std::exp(lam_up * t) * dir_up) * nodes.up[k];
                acc -= (nodes.w[k] * std::exp(lam_dn * t) * dir_dn) * nodes.dn[k];
            }
        }
        acc /= std::complex<double>(0.0, 2.0 * M_PI);
        acc = f.schur_u * acc * f.schur_u.adjoint();

        // result scale floored at 1 so the check stays meaningful in the
        // strongly decayed regime where ||T(t)|| sits below the roundoff
        // level of the accumulation
        const double re_norm = acc.real().norm();
        const double im_norm = acc.imag().norm();
        if (!(im_norm <= 1e-10 * std::max(re_norm, 1.0)))
            throw QuadratureError("contour quadrature imaginary residue too large at tau=" +
                                      std::to_string(tau) + ", t=" + std::to_string(t),
                                  im_norm / std::max(re_norm, 1e-30));
        return acc.real();
    }

    OperatorFamily fam_;
    Contour contour_;
    mutable std::mutex mutex_;
    mutable std::map<Key, Matrix> cache_;
    mutable std::mutex frozen_mutex_;
    mutable std::map<std::uint64_t, Frozen> frozen_;
};

} // namespace evoproc
