#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "evoproc/errors.hpp"

namespace evoproc {
namespace product_integration {

/// Exact integrals int_p^q (s - a)^{e-1} L_i(s) ds for the Lagrange basis on
/// the points z (one to three of them). Assumes p >= a.
inline std::vector<double> weighted_lagrange_moments(double a, double e, double p, double q,
                                                     const std::vector<double>& z) {
    const int deg = static_cast<int>(z.size());
    // power moments mu_j = int (s-a)^{e-1+j} ds
    double mu[3] = {0, 0, 0};
    for (int j = 0; j < 3; ++j)
        mu[j] = (std::pow(q - a, e + j) - std::pow(p - a, e + j)) / (e + j);
    std::vector<double> out(deg, 0.0);
    if (deg == 1) {
        out[0] = mu[0];
        return out;
    }
    std::vector<double> u(deg);
    for (int i = 0; i < deg; ++i) u[i] = z[i] - a;
    if (deg == 2) {
        out[0] = (mu[1] - u[1] * mu[0]) / (u[0] - u[1]);
        out[1] = (mu[1] - u[0] * mu[0]) / (u[1] - u[0]);
        return out;
    }
    for (int i = 0; i < 3; ++i) {
        const double uj = u[(i + 1) % 3], uk = u[(i + 2) % 3];
        const double denom = (u[i] - uj) * (u[i] - uk);
        out[i] = (mu[2] - (uj + uk) * mu[1] + uj * uk * mu[0]) / denom;
    }
    return out;
}

/// One term of a quadrature plan: coefficient on the integrand value at a
/// grid node. Regularized endpoint limits are folded into the
/// coefficients, so singular endpoints never appear as plan entries.
struct PlanTerm {
    int index;
    double coef;
};

/// Quadrature plan for int_{x_0}^{x_m} f(s) ds when f carries a weak
/// left singularity (s - x_0)^{delta_left - 1} and/or a weak right
/// singularity (x_m - s)^{beta_right - 1} (exponent 1 = no weight).
///
/// Only the panels touching a singular endpoint use the weighted rule:
/// there the singular factor is integrated exactly against an interpolant
/// of the regularized smooth factor, which is pinned to its zero limit at
/// the endpoint itself. Away from the endpoints every mode of the matrix
/// integrands is smooth, so interior panels use plain quadratic (fallback
/// linear) interpolation of the full integrand; forcing the weighted
/// representation there would degrade exactly the smooth components that
/// carry the mass. Node values at nonsingular endpoints are used as is;
/// the kernels in this library have exact zero limits there.
inline std::vector<PlanTerm> make_plan(const std::vector<double>& xs, int m, double delta_left,
                                       double beta_right) {
    if (m <= 0 || m >= static_cast<int>(xs.size()))
        throw DomainError("quadrature plan target out of range");
    const double tiny = 1e-12;
    const bool sing_l = delta_left < 1.0 - tiny;
    const bool sing_r = beta_right < 1.0 - tiny;
    const double a = xs[0], b = xs[m];

    std::vector<double> acc(m + 1, 0.0);
    auto add = [&](int i, double c) { acc[i] += c; };

    auto usable = [&](int i) {
        if (i < 0 || i > m) return false;
        if (i == 0 && sing_l) return false;
        if (i == m && sing_r) return false;
        return true;
    };

    // stencil of up to three node indices around panel [k, k+1]
    auto stencil = [&](int k) -> std::vector<int> {
        if (usable(k - 1) && usable(k) && usable(k + 1)) return {k - 1, k, k + 1};
        if (usable(k) && usable(k + 1) && usable(k + 2)) return {k, k + 1, k + 2};
        if (usable(k) && usable(k + 1)) return {k, k + 1};
        if (usable(k + 1) && usable(k + 2)) return {k + 1, k + 2};
        if (usable(k - 1) && usable(k)) return {k - 1, k};
        if (usable(k + 1)) return {k + 1};
        if (usable(k)) return {k};
        return {};
    };

    for (int k = 0; k < m; ++k) {
        const std::vector<int> pts = stencil(k);
        if (pts.empty()) continue; // doubly singular single panel: dropped

        if (k == 0 && sing_l) {
            // interpolate g(s) = (s-a)^{1-delta} f(s) through the
            // regularized zero at s = a and the stencil nodes
            std::vector<double> z{a};
            for (int i : pts) z.push_back(xs[i]);
            const auto c = weighted_lagrange_moments(a, delta_left, xs[k], xs[k + 1], z);
            for (std::size_t i = 0; i < pts.size(); ++i)
                add(pts[i], c[i + 1] * std::pow(xs[pts[i]] - a, 1.0 - delta_left));
        } else if (k + 1 == m && sing_r) {
            // mirrored in v = b - s
            std::vector<double> z{0.0};
            for (int i : pts) z.push_back(b - xs[i]);
            const auto c =
                weighted_lagrange_moments(0.0, beta_right, b - xs[k + 1], b - xs[k], z);
            for (std::size_t i = 0; i < pts.size(); ++i)
                add(pts[i], c[i + 1] * std::pow(b - xs[pts[i]], 1.0 - beta_right));
        } else {
            std::vector<double> z;
            for (int i : pts) z.push_back(xs[i]);
            const auto c = weighted_lagrange_moments(xs[k], 1.0, xs[k], xs[k + 1], z);
            for (std::size_t i = 0; i < pts.size(); ++i) add(pts[i], c[i]);
        }
    }

    std::vector<PlanTerm> plan;
    for (int i = 0; i <= m; ++i)
        if (acc[i] != 0.0) plan.push_back({i, acc[i]});
    return plan;
}

} // namespace product_integration
} // namespace evoproc
