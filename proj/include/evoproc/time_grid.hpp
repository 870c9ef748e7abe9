#pragma once

#include <cmath>
#include <vector>

#include "evoproc/errors.hpp"

namespace evoproc {

enum class GridRule { Uniform, Graded };

/// Discretization of the time interval [tau, t_end]. The graded rule
/// clusters nodes near tau as tau + (t_end - tau) (j/n)^q, which matches
/// the location of the weakly singular kernel factors.
struct TimeGrid {
    double tau = 0.0;
    double t_end = 1.0;
    int n_steps = 64;
    GridRule rule = GridRule::Graded;
    double grading_q = 2.0;

    void validate() const {
        if (!(tau < t_end)) throw DomainError("time grid requires tau < t_end");
        if (n_steps < 1) throw DomainError("time grid needs at least one step");
        if (!(grading_q >= 1.0)) throw DomainError("grading exponent must be >= 1");
    }

    double node(int j) const {
        const double f = static_cast<double>(j) / n_steps;
        const double q = rule == GridRule::Graded ? grading_q : 1.0;
        return tau + (t_end - tau) * std::pow(f, q);
    }

    std::vector<double> nodes() const {
        validate();
        std::vector<double> out(n_steps + 1);
        for (int j = 0; j <= n_steps; ++j) out[j] = node(j);
        out.front() = tau;
        out.back() = t_end;
        return out;
    }

    TimeGrid refined(int factor = 2) const {
        TimeGrid g = *this;
        g.n_steps *= factor;
        return g;
    }
};

} // namespace evoproc
