#include <catch2/catch.hpp>

#include <cstring>

#include "helpers.hpp"

using namespace evoproc;

TEST_CASE("constant-coefficient stencil and spectrum", "[problems]") {
    ReactionDiffusionConfig cfg;
    cfg.n_cells = 2;
    cfg.a = [](double, double, double) { return 1.0; };
    const ProblemBundle b = build_reaction_diffusion(cfg, 0.0);
    const Matrix A = b.fam.eval(0.0);
    const double k = 1.0 / (0.5 * 0.5);
    CHECK(A(0, 0) == Approx(1.0 + k));
    CHECK(A(0, 1) == Approx(-k));
    CHECK(A(1, 0) == Approx(-k));
    CHECK(A(1, 1) == Approx(1.0 + k));

    // Neumann Laplacian + I: smallest eigenvalue 1 on the constant mode
    ReactionDiffusionConfig cfg32 = cfg;
    cfg32.n_cells = 32;
    const ProblemBundle b32 = build_reaction_diffusion(cfg32, 0.0);
    Eigen::EigenSolver<Matrix> eig(b32.fam.eval(0.3));
    double smallest = 1e300;
    for (long i = 0; i < eig.eigenvalues().size(); ++i)
        smallest = std::min(smallest, eig.eigenvalues()(i).real());
    CHECK(smallest == Approx(1.0).margin(1e-8));
}

TEST_CASE("operator is symmetric in the mass inner product with spectrum >= 1", "[problems]") {
    auto cfg = helpers::model_rd_config(24);
    const ProblemBundle b = build_reaction_diffusion(cfg, 0.07);
    for (double t : {0.0, 0.8}) {
        const Matrix A = b.fam.eval(t);
        const Matrix MA = b.space->gram_x() * A;
        CHECK((MA - MA.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::EigenSolver<Matrix> eig(A);
        for (long i = 0; i < eig.eigenvalues().size(); ++i) {
            CHECK(std::abs(eig.eigenvalues()(i).imag()) < 1e-9);
            CHECK(eig.eigenvalues()(i).real() >= 1.0 - 1e-9);
        }
    }
}

TEST_CASE("generator rejects nonpositive coefficients", "[problems]") {
    ReactionDiffusionConfig cfg;
    cfg.n_cells = 8;
    cfg.a = [](double t, double x, double) { return 0.5 - x + 0.0 * t; };
    CHECK_THROWS_AS(build_reaction_diffusion(cfg, 0.0), ConfigError);
}

TEST_CASE("ratio map inherits the coefficient's Hoelder exponent", "[problems]") {
    auto cfg = helpers::model_rd_config(16);
    const ProblemBundle b = build_reaction_diffusion(cfg, 0.0);
    std::vector<double> grid;
    for (int i = 0; i < 8; ++i) grid.push_back(0.2 + 0.12 * i);
    const HolderFit fit = estimate_delta(b.fam, grid, 0.2);
    CHECK_FALSE(fit.autonomous);
    CHECK(fit.delta_fit >= 0.9); // coefficient is Lipschitz in t
}

TEST_CASE("xi is controlled by the coefficient gaps", "[problems]") {
    auto cfg = helpers::model_rd_config(16);
    const ProblemBundle b0 = build_reaction_diffusion(cfg, 0.0);
    const std::vector<double> ts{0.0, 0.5, 1.0, 1.5};
    std::vector<double> cs;
    for (double e : {1e-1, 3e-2, 1e-2, 3e-3}) {
        const ProblemBundle be = build_reaction_diffusion(cfg, e);
        // a_eps - a_0 = eps (0.5 + x): sup = 1.5 eps, grad gap = eps
        const double gap = 1.5 * e + e;
        cs.push_back(xi(be.fam, b0.fam, ts, ts) / gap);
    }
    const double cmax = *std::max_element(cs.begin(), cs.end());
    const double cmin = *std::min_element(cs.begin(), cs.end());
    INFO("xi / gap ratios spread " << cmin << " .. " << cmax);
    CHECK(cmax / cmin < 1.3);
}

TEST_CASE("wave blocks at special parameters", "[problems]") {
    // alpha = 1 reproduces the system block bitwise via the same code path
    for (double nu : {1.0, 2.5, 9.0, 400.0}) {
        const Eigen::Matrix2d direct = wave_block(nu);
        const Eigen::Matrix2d frac = wave_frac_block(nu, 1.0);
        CHECK(std::memcmp(direct.data(), frac.data(), sizeof(double) * 4) == 0);
    }
    // alpha = 1/2 at nu = 1: all powers equal one
    const Eigen::Matrix2d half = wave_frac_block(1.0, 0.5);
    CHECK(half(0, 0) == Approx(0.5));
    CHECK(half(0, 1) == Approx(-0.5));
    CHECK(half(1, 0) == Approx(0.5));
    CHECK(half(1, 1) == Approx(1.5));

    // fractional inverse really inverts the fractional block
    for (double alpha : {0.6, 0.9, 1.0}) {
        const Eigen::Matrix2d prod = wave_frac_block(3.7, alpha) * wave_frac_inverse_block(3.7, alpha);
        CHECK((prod - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    }
}

TEST_CASE("wave bundle structure", "[problems]") {
    auto cfg = helpers::model_wave_config(6);
    const ProblemBundle b = build_wave(cfg, 0.8);
    CHECK(b.space->dim() == 12);
    CHECK(b.fam.epsilon == Approx(0.2));
    const Matrix L = b.fam.eval(0.4);
    // block diagonal: off-block entries vanish
    CHECK(L.block(0, 2, 2, 10).norm() == 0.0);
    CHECK(L.block(2, 0, 10, 2).norm() == 0.0);
    CHECK_THROWS_AS(build_wave(cfg, 1.5), ConfigError);
    CHECK_THROWS_AS(build_wave(cfg, 0.0), ConfigError);
}

TEST_CASE("powers of the wave coefficient stay Hoelder", "[problems]") {
    auto cfg = helpers::model_wave_config(4);
    // fitted Hoelder exponent of t -> a(t)^w for the exponents used by the
    // fractional blocks
    for (double w : {0.3, 0.5, 0.95, -0.5}) {
        std::vector<double> lx, ly;
        for (double t1 = 0.0; t1 < 1.5; t1 += 0.25)
            for (double t2 = t1 + 0.25; t2 < 1.6; t2 += 0.25) {
                lx.push_back(std::log(t2 - t1));
                ly.push_back(std::log(
                    std::abs(std::pow(cfg.a(t1), w) - std::pow(cfg.a(t2), w)) + 1e-300));
            }
        const double slope = detail::fit_line(lx, ly).first;
        INFO("w=" << w << " slope=" << slope);
        CHECK(slope >= 0.85);
    }
}

TEST_CASE("sector check passes across the alpha ladder with one phi", "[problems]") {
    auto cfg = helpers::model_wave_config(8);
    const std::vector<double> ts{0.0, 0.7, 1.4};
    double worst = 0.0;
    for (double alpha : cfg.alpha_list) {
        const ProblemBundle b = build_wave(cfg, alpha);
        const SectorReport rep = check_sector(b.fam, 3.0 * M_PI / 4.0, ts, 16);
        REQUIRE(rep.ok);
        worst = std::max(worst, rep.worst_c_x);
    }
    INFO("uniform sector constant " << worst);
    CHECK(std::isfinite(worst));
    CHECK(worst < 100.0);
}

TEST_CASE("wave process matches the matrix-ODE oracle", "[problems]") {
    // the blocks are defective (equal eigenvalues, one eigenvector), so this
    // also exercises the quadrature beyond diagonalizable generators
    auto cfg = helpers::model_wave_config(4);
    const ProblemBundle b = build_wave(cfg, 0.8);
    SemigroupEvaluator ev(b.fam);
    TimeGrid grid{0.0, 1.0, 32, GridRule::Graded, 2.0};
    const EvolutionProcess proc = build_process(ev, solve_phi(ev, grid, {}), grid,
                                                {ProcessExtent::FirstColumn});
    auto A = [&](double t) { return b.fam.eval(t); };
    double worst = 0.0;
    for (int i : {8, 16, 32}) {
        const Matrix ref = oracles::propagator_ode(A, 0.0, grid.node(i), 8, 1e-11, 1e-13);
        worst = std::max(worst, (proc.at(i, 0) - ref).norm() / std::max(ref.norm(), 1e-300));
    }
    INFO("worst rel " << worst);
    CHECK(worst < 1e-5);
}

TEST_CASE("fractional inverse gap scales linearly in 1 - alpha", "[problems]") {
    auto cfg = helpers::model_wave_config(16);
    const SpacePtr space = wave_space(cfg.n_modes);
    std::vector<double> lx, ly;
    for (double alpha : cfg.alpha_list) {
        double worst = 0.0;
        for (double t : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            const Matrix d =
                wave_lambda_inverse_alpha(cfg, alpha, t) - wave_lambda_inverse_alpha(cfg, 1.0, t);
            worst = std::max(worst, space->op_norm(d, NormKind::X, NormKind::X));
        }
        lx.push_back(std::log(1.0 - alpha));
        ly.push_back(std::log(worst));
    }
    const double slope = detail::fit_line(lx, ly).first;
    INFO("slope " << slope);
    CHECK(slope == Approx(1.0).margin(0.15));
}
