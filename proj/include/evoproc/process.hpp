#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "evoproc/errors.hpp"
#include "evoproc/parallel.hpp"
#include "evoproc/product_integration.hpp"
#include "evoproc/semigroup.hpp"
#include "evoproc/time_grid.hpp"

namespace evoproc {

/// phi(t, tau) = [A(tau) - A(t)] T_{-A(tau)}(t - tau), the forcing kernel
/// of the fixed-point equation behind the process construction.
inline Matrix phi_kernel(const SemigroupEvaluator& ev, double t, double tau) {
    if (!(t > tau)) throw DomainError("phi_kernel requires t > tau");
    return (ev.family().eval(tau) - ev.family().eval(t)) * ev.semigroup_at(tau, t - tau);
}

enum class PhiMethod { Neumann, ProductIntegration };

struct PhiOptions {
    PhiMethod method = PhiMethod::ProductIntegration;
    double delta = 1.0;  // kernel singularity exponent used by the quadrature
    double tol = 1e-10;  // Neumann fixed-point tolerance, L(X) norm
    int max_iter = 200;
};

/// Grid samples of Phi(t_j, tau) solving the weakly singular Volterra
/// equation. values[0] holds the zero matrix by convention; the quadrature
/// plans never read a value at a singular node.
struct PhiResolvent {
    std::vector<double> nodes;
    std::vector<Matrix> values;
    double delta = 1.0;

    /// max over the grid of (t_j - tau)^{1 - delta} |Phi(t_j, tau)|_X
    double singularity_bound(const DiscreteSpace& space) const {
        double m = 0.0;
        for (std::size_t j = 1; j < nodes.size(); ++j)
            m = std::max(m, std::pow(nodes[j] - nodes[0], 1.0 - delta) *
                                space.op_norm(values[j], NormKind::X, NormKind::X));
        return m;
    }
};

namespace detail {

/// Shared workspace for one starting node: operator samples and semigroup
/// values along the remaining grid tail.
class ProcessTail {
public:
    ProcessTail(const SemigroupEvaluator& ev, std::vector<double> xs) : ev_(ev), xs_(std::move(xs)) {
        a_.resize(xs_.size());
        for (std::size_t k = 0; k < xs_.size(); ++k) a_[k] = ev.family().eval(xs_[k]);
    }

    const std::vector<double>& xs() const { return xs_; }
    const Matrix& a(int k) const { return a_[k]; }

    // T_{-A(x_k)}(x_i - x_k)
    Matrix sg(int k, int i) const { return ev_.semigroup_at(xs_[k], xs_[i] - xs_[k]); }

    // phi(x_m, x_k) = [A(x_k) - A(x_m)] T_{-A(x_k)}(x_m - x_k); zero on the diagonal
    Matrix phi(int m, int k) const {
        if (k == m) return Matrix::Zero(a_[0].rows(), a_[0].cols());
        return (a_[k] - a_[m]) * sg(k, m);
    }

private:
    const SemigroupEvaluator& ev_;
    std::vector<double> xs_;
    std::vector<Matrix> a_;
};

inline std::vector<Matrix> solve_phi_direct(const ProcessTail& tail, double delta) {
    const auto& xs = tail.xs();
    const int K = static_cast<int>(xs.size()) - 1;
    const long n = tail.a(0).rows();
    std::vector<Matrix> phi_m0(K + 1);
    std::vector<Matrix> values(K + 1, Matrix::Zero(n, n));
    for (int m = 1; m <= K; ++m) phi_m0[m] = tail.phi(m, 0);
    for (int m = 1; m <= K; ++m) {
        Matrix acc = phi_m0[m];
        for (const auto& term : product_integration::make_plan(xs, m, delta, delta))
            acc += term.coef * (tail.phi(m, term.index) * values[term.index]);
        values[m] = std::move(acc);
    }
    return values;
}

inline std::vector<Matrix> solve_phi_neumann(const ProcessTail& tail, const DiscreteSpace& space,
                                             double delta, double tol, int max_iter) {
    const auto& xs = tail.xs();
    const int K = static_cast<int>(xs.size()) - 1;
    const long n = tail.a(0).rows();

    std::vector<Matrix> forcing(K + 1), cur(K + 1, Matrix::Zero(n, n)),
        next(K + 1, Matrix::Zero(n, n));
    std::vector<std::vector<product_integration::PlanTerm>> plans(K + 1);
    for (int m = 1; m <= K; ++m) {
        forcing[m] = tail.phi(m, 0);
        plans[m] = product_integration::make_plan(xs, m, delta, delta);
    }

    std::vector<double> history;
    int grew = 0;
    for (int it = 0; it < max_iter; ++it) {
        parallel_for(K, [&](std::size_t idx) {
            const int m = static_cast<int>(idx) + 1;
            Matrix acc = forcing[m];
            for (const auto& term : plans[m])
                acc += term.coef * (tail.phi(m, term.index) * cur[term.index]);
            next[m] = std::move(acc);
        });
        double dist = 0.0;
        for (int m = 1; m <= K; ++m)
            dist = std::max(dist, space.op_norm(Matrix(next[m] - cur[m]), NormKind::X, NormKind::X));
        std::swap(cur, next);
        history.push_back(dist);
        if (dist <= tol) return cur;
        const std::size_t h = history.size();
        grew = (h >= 2 && history[h - 1] > history[h - 2]) ? grew + 1 : 0;
        if (grew >= 3)
            throw ConvergenceError(
                "Neumann iteration not contracting; refine the time grid or shorten the window",
                history);
    }
    throw ConvergenceError("Neumann iteration exceeded max_iter", history);
}

} // namespace detail

/// Solve the kernel fixed-point equation on the grid. The direct method is
/// a forward product-integration recursion; the Neumann method iterates the
/// integral map with the same quadrature and converges to the same discrete
/// fixed point.
inline PhiResolvent solve_phi(const SemigroupEvaluator& ev, const TimeGrid& grid,
                              const PhiOptions& opts = {}) {
    grid.validate();
    if (!(opts.delta > 0.0 && opts.delta <= 1.0))
        throw DomainError("phi solve requires delta in (0, 1]");
    PhiResolvent out;
    out.nodes = grid.nodes();
    out.delta = opts.delta;

    // warm the semigroup cache in one batch per frozen time
    const auto& xs = out.nodes;
    parallel_for(xs.size() - 1, [&](std::size_t k) {
        std::vector<double> ts;
        for (std::size_t i = k + 1; i < xs.size(); ++i) ts.push_back(xs[i] - xs[k]);
        ev.semigroup_batch(xs[k], ts);
    });

    detail::ProcessTail tail(ev, xs);
    if (opts.method == PhiMethod::ProductIntegration)
        out.values = detail::solve_phi_direct(tail, opts.delta);
    else
        out.values =
            detail::solve_phi_neumann(tail, *ev.family().space, opts.delta, opts.tol, opts.max_iter);
    return out;
}

enum class ProcessExtent { FirstColumn, AllPairs };

/// Grid-cached linear evolution process U(t_i, t_j). AllPairs stores the
/// whole lower triangle (needed by the variation-of-constants solver);
/// FirstColumn keeps only U(t_i, tau).
class EvolutionProcess {
public:
    EvolutionProcess(OperatorFamily fam, std::vector<double> nodes, ProcessExtent extent)
        : fam_(std::move(fam)), nodes_(std::move(nodes)), extent_(extent) {
        const std::size_t n = nodes_.size();
        if (extent_ == ProcessExtent::AllPairs)
            u_.resize(n * (n - 1) / 2);
        else
            u_.resize(n - 1);
    }

    const OperatorFamily& family() const { return fam_; }
    const DiscreteSpace& space() const { return *fam_.space; }
    const std::vector<double>& nodes() const { return nodes_; }
    double tau() const { return nodes_.front(); }
    ProcessExtent extent() const { return extent_; }

    /// U(t_i, t_j), i >= j. U(t, t) is the identity exactly.
    Matrix at(int i, int j) const {
        check_pair(i, j);
        if (i == j) return Matrix::Identity(fam_.space->dim(), fam_.space->dim());
        return u_[slot(i, j)];
    }

    Matrix& slot_ref(int i, int j) {
        check_pair(i, j);
        if (i == j) throw DomainError("diagonal entries are implicit");
        return u_[slot(i, j)];
    }

private:
    void check_pair(int i, int j) const {
        if (j < 0 || i >= static_cast<int>(nodes_.size()) || j > i)
            throw DomainError("process pair indices out of range");
        if (extent_ == ProcessExtent::FirstColumn && j != 0 && j != i)
            throw DomainError("process was built with the first column only");
    }

    std::size_t slot(int i, int j) const {
        if (extent_ == ProcessExtent::FirstColumn) return static_cast<std::size_t>(i - 1);
        return static_cast<std::size_t>(i) * (i - 1) / 2 + j;
    }

    OperatorFamily fam_;
    std::vector<double> nodes_;
    ProcessExtent extent_;
    std::vector<Matrix> u_;
};

struct ProcessOptions {
    ProcessExtent extent = ProcessExtent::AllPairs;
};

/// Assemble U(t_i, t_j) from the semigroup and the kernel resolvent by
/// product integration of the assembly integral. Interior starting times
/// are handled by re-running the kernel solve on the shifted tail; the
/// cocycle identity is never used to synthesize entries.
inline EvolutionProcess build_process(const SemigroupEvaluator& ev, const PhiResolvent& phi_res,
                                      const TimeGrid& grid, const ProcessOptions& opts = {}) {
    const std::vector<double> nodes = grid.nodes();
    if (phi_res.nodes != nodes)
        throw GridMismatchError("phi resolvent was solved on a different grid");
    const int n = static_cast<int>(nodes.size()) - 1;
    const double delta = phi_res.delta;

    // one semigroup batch per frozen time covers every assembly need
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
        std::vector<double> ts;
        for (int i = static_cast<int>(k) + 1; i <= n; ++i) ts.push_back(nodes[i] - nodes[k]);
        ev.semigroup_batch(nodes[k], ts);
    });

    EvolutionProcess proc(ev.family(), nodes, opts.extent);
    const int j_count = opts.extent == ProcessExtent::AllPairs ? n : 1;

    parallel_for(static_cast<std::size_t>(j_count), [&](std::size_t jz) {
        const int j = static_cast<int>(jz);
        const std::vector<double> xs(nodes.begin() + j, nodes.end());
        detail::ProcessTail tail(ev, xs);
        const std::vector<Matrix> phi =
            j == 0 ? phi_res.values : detail::solve_phi_direct(tail, delta);
        for (int i = 1; i <= n - j; ++i) {
            Matrix acc = tail.sg(0, i);
            for (const auto& term : product_integration::make_plan(xs, i, delta, 1.0))
                acc += term.coef * (tail.sg(term.index, i) * phi[term.index]);
            proc.slot_ref(i + j, j) = std::move(acc);
        }
    });
    return proc;
}

/// Executable checks of the process axioms: cocycle identity over sampled
/// triples, the generator equation via divided differences at interior
/// nodes, and the boundedness constants of the window.
struct AxiomReport {
    double cocycle_defect = 0.0;
    double generator_residual = 0.0;
    double bound_const = 0.0;         // sup |U(t, tau)|_X
    double dt_derivative_bound = 0.0; // sup (t - tau) |dU/dt|_X
    int triples_checked = 0;
};

inline AxiomReport check_process_axioms(const EvolutionProcess& proc, int max_triples = 1500) {
    const auto& nodes = proc.nodes();
    const int n = static_cast<int>(nodes.size()) - 1;
    if (n + 1 < 8) throw DomainError("axiom check needs a process with at least 8 nodes");
    const DiscreteSpace& sp = proc.space();
    AxiomReport rep;

    if (proc.extent() == ProcessExtent::AllPairs) {
        std::vector<std::array<int, 3>> triples;
        for (int j = 0; j <= n; ++j)
            for (int s = j; s <= n; ++s)
                for (int i = s; i <= n; ++i) triples.push_back({i, s, j});
        std::size_t stride = std::max<std::size_t>(1, triples.size() / max_triples);
        std::vector<double> defects((triples.size() + stride - 1) / stride);
        parallel_for(defects.size(), [&](std::size_t w) {
            const auto [i, s, j] = triples[w * stride];
            const Matrix d = proc.at(i, s) * proc.at(s, j) - proc.at(i, j);
            defects[w] = sp.op_norm(d, NormKind::X, NormKind::X);
        });
        for (double d : defects) rep.cocycle_defect = std::max(rep.cocycle_defect, d);
        rep.triples_checked = static_cast<int>(defects.size());
    }

    // generator residual with the two-point centered quotient. The sup is
    // taken over the interior nodes past 10% of the window: towards tau the
    // derivative itself scales like (t - tau)^{-1} and a sup-norm residual
    // there measures the singularity, not the scheme. The weighted
    // derivative bound below covers the corner.
    const double corner = nodes[0] + 0.1 * (nodes[n] - nodes[0]);
    std::vector<double> resid(std::max(0, n - 1)), dtnorm(std::max(0, n - 1));
    parallel_for(resid.size(), [&](std::size_t w) {
        const int i = static_cast<int>(w) + 1;
        const double h2 = nodes[i + 1] - nodes[i - 1];
        const Matrix du = (proc.at(i + 1, 0) - proc.at(i - 1, 0)) / h2;
        const Matrix r = du + proc.family().eval(nodes[i]) * proc.at(i, 0);
        resid[w] = nodes[i] >= corner ? sp.op_norm(r, NormKind::X, NormKind::X) : 0.0;
        dtnorm[w] = (nodes[i] - nodes[0]) * sp.op_norm(du, NormKind::X, NormKind::X);
    });
    for (double v : resid) rep.generator_residual = std::max(rep.generator_residual, v);
    for (double v : dtnorm) rep.dt_derivative_bound = std::max(rep.dt_derivative_bound, v);

    for (int i = 1; i <= n; ++i)
        rep.bound_const =
            std::max(rep.bound_const, sp.op_norm(proc.at(i, 0), NormKind::X, NormKind::X));
    return rep;
}

enum class DistanceNorm { X, XY };

/// Per-node |U_eps(t, tau) - U_lim(t, tau)| in L(X) or L(X, Y).
inline std::vector<std::pair<double, double>> process_distance(const EvolutionProcess& p_eps,
                                                               const EvolutionProcess& p_0,
                                                               DistanceNorm which) {
    if (p_eps.nodes() != p_0.nodes())
        throw GridMismatchError("process distance requires identical grids");
    if (p_eps.space().dim() != p_0.space().dim())
        throw GridMismatchError("process distance requires identical spaces");
    const auto& nodes = p_eps.nodes();
    const DiscreteSpace& sp = p_eps.space();
    std::vector<std::pair<double, double>> out(nodes.size() - 1);
    parallel_for(out.size(), [&](std::size_t w) {
        const int i = static_cast<int>(w) + 1;
        const Matrix d = p_eps.at(i, 0) - p_0.at(i, 0);
        const double v = which == DistanceNorm::X ? sp.op_norm(d, NormKind::X, NormKind::X)
                                                  : sp.op_norm(d, NormKind::X, NormKind::Y);
        out[w] = {nodes[i], v};
    });
    return out;
}

} // namespace evoproc
