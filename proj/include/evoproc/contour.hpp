#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "evoproc/errors.hpp"

namespace evoproc {

enum class QuadratureKind { CompositeGaussLegendre, TanhSinh };

/// Truncated sector boundary used by the semigroup integral. The two rays
/// r e^{+-i phi} are truncated at R(t) = radius_scale / (t |cos phi|), so the
/// discarded tail of e^{r cos(phi) t} is below e^{-radius_scale}.
///
/// nodes_per_ray fixes the Gauss-Legendre order per panel (nodes_per_ray / 4);
/// the panel ladder itself is geometric with the given ratio and spans from
/// below the smallest eigenvalue magnitude of A up to R(t), so the node count
/// on a ray grows logarithmically when those scales are far apart.
struct Contour {
    double phi = 3.0 * M_PI / 4.0;
    int nodes_per_ray = 48;
    double panel_ratio = 2.0;
    QuadratureKind quadrature = QuadratureKind::CompositeGaussLegendre;
    double radius_scale = 40.0;
    // optional fixed truncation radius; 0 means adapt per evaluation time
    double radius_max = 0.0;

    void validate() const {
        if (!(phi > M_PI / 2.0 && phi < M_PI)) throw DomainError("contour phi must lie in (pi/2, pi)");
        if (nodes_per_ray < 16) throw DomainError("contour needs at least 16 nodes per ray");
        if (!(panel_ratio > 1.0)) throw DomainError("contour panel ratio must exceed 1");
        if (!(radius_scale >= 30.0))
            throw DomainError("contour radius_scale must be >= 30 to keep the truncation error negligible");
    }

    int panel_order() const { return std::max(4, nodes_per_ray / 4); }

    /// Truncation radius for evaluation time t > 0.
    double radius_at(double t) const {
        const double adaptive = radius_scale / (t * std::abs(std::cos(phi)));
        if (radius_max > 0.0) {
            if (radius_max * std::abs(std::cos(phi)) * t < 30.0)
                throw DomainError("fixed contour radius too small for requested time");
            return radius_max;
        }
        return adaptive;
    }
};

namespace quadrature {

/// Gauss-Legendre nodes/weights on [-1, 1] via the Golub-Welsch eigenproblem.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    if (n == 1) {
        nodes[0] = 0.0;
        weights[0] = 2.0;
        return;
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    for (int k = 0; k < n; ++k) {
        nodes[k] = eig.eigenvalues()(k);
        const double v = eig.eigenvectors()(0, k);
        weights[k] = 2.0 * v * v;
    }
}

/// Nodes/weights on [0, R]. The Gauss rule uses a geometric panel ladder
/// from r_floor (a scale below which the resolvent is flat) up to R.
inline void ray_rule(double R, double r_floor, const Contour& contour, std::vector<double>& r,
                     std::vector<double>& w) {
    r.clear();
    w.clear();
    if (contour.quadrature == QuadratureKind::TanhSinh) {
        // single double-exponential panel on [0, R]; needs roughly twice the
        // nodes of the panelled Gauss rule for comparable accuracy
        const int half = std::max(8, contour.nodes_per_ray);
        const double h = 3.6 / half;
        for (int k = -half; k <= half; ++k) {
            const double u = k * h;
            const double s = std::sinh(u) * (M_PI / 2.0);
            const double x = std::tanh(s); // in (-1, 1)
            const double dx = (M_PI / 2.0) * std::cosh(u) / (std::cosh(s) * std::cosh(s));
            r.push_back(0.5 * R * (1.0 + x));
            w.push_back(0.5 * R * dx * h);
        }
        return;
    }
    const int order = contour.panel_order();
    std::vector<double> gl_x, gl_w;
    gauss_legendre(order, gl_x, gl_w);

    double lo = std::min(std::max(r_floor, R * 1e-14), 0.25 * R);
    std::vector<double> bp{0.0, lo};
    while (bp.back() < R) bp.push_back(std::min(bp.back() * contour.panel_ratio, R));
    for (std::size_t p = 0; p + 1 < bp.size(); ++p) {
        const double a = bp[p], b = bp[p + 1];
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int k = 0; k < order; ++k) {
            r.push_back(mid + half * gl_x[k]);
            w.push_back(half * gl_w[k]);
        }
    }
}

} // namespace quadrature
} // namespace evoproc
