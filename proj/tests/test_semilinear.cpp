#include <catch2/catch.hpp>

#include "helpers.hpp"

using namespace evoproc;

namespace {

SpacePtr euclid(int n) { return std::make_shared<DiscreteSpace>(DiscreteSpace::euclidean(n)); }

struct RdSetup {
    ProblemBundle bundle;
    EvolutionProcess proc;
    TimeGrid grid;
};

RdSetup rd_setup(int n_cells, double eps, TimeGrid grid) {
    auto cfg = helpers::model_rd_config(n_cells);
    ProblemBundle b = build_reaction_diffusion(cfg, eps);
    SemigroupEvaluator ev(b.fam);
    PhiResolvent phi = solve_phi(ev, grid, {});
    EvolutionProcess proc = build_process(ev, phi, grid, {});
    return {std::move(b), std::move(proc), grid};
}

} // namespace

TEST_CASE("cutoff retraction", "[semilinear]") {
    auto space = euclid(2);
    Nonlinearity F;
    F.space = space;
    F.cutoff_radius = 1.0;
    F.eval_raw = [](double, const Vector& u) { return u; };

    Vector small(2);
    small << 0.3, 0.4; // norm 0.5 < R
    CHECK((F.retract(small) - small).norm() == 0.0);

    Vector big(2);
    big << 30.0, 40.0; // norm 50 >= 2R: retracted to radius 1.5R
    CHECK(space->norm(F.retract(big), NormKind::Y) == Approx(1.5));
    // far outside, evaluation equals evaluation at the retracted point
    CHECK((F(0.0, big) - F.retract(big)).norm() == 0.0);

    // C^1 blend: the profile and its slope are continuous at R and 2R
    const double h = 1e-7;
    CHECK(F.retract_radius(1.0 + h) - F.retract_radius(1.0 - h) == Approx(2 * h).epsilon(1e-3));
    CHECK(F.retract_radius(2.0 + h) - F.retract_radius(2.0 - h) == Approx(0.0).margin(1e-9));
    // monotone profile
    for (double r = 0.1; r < 3.0; r += 0.05)
        CHECK(F.retract_radius(r + 0.05) >= F.retract_radius(r) - 1e-12);
}

TEST_CASE("sampled Lipschitz quotients respect the declared constant", "[semilinear]") {
    auto cfg = helpers::model_rd_config(12);
    ProblemBundle b = build_reaction_diffusion(cfg, 0.05);
    // tanh(s) + eps sin(s): scalar slope below 1 + eps everywhere; the
    // X<-Y norm gap makes the vector quotient smaller still
    b.F.lip_const = 1.05;
    std::mt19937_64 rng(99);
    const auto ns = sample_nonlinearity(b.F, {0.0, 1.0}, 6.0, 64, rng);
    CHECK(ns.lip <= b.F.lip_const * 1.05);
}

TEST_CASE("gamma of the model nonlinearity pair", "[semilinear]") {
    auto cfg = helpers::model_rd_config(16);
    ProblemBundle be = build_reaction_diffusion(cfg, 0.1);
    ProblemBundle b0 = build_reaction_diffusion(cfg, 0.0);
    std::vector<Vector> us;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int k = 0; k < 6; ++k) {
        Vector u(16);
        for (int i = 0; i < 16; ++i) u(i) = g(rng);
        us.push_back(u * (3.0 / be.space->norm(u, NormKind::Y)));
    }
    CHECK(gamma(be.F, be.F, {0.0, 1.0}, us) == 0.0);
    // f_eps - f_0 = eps sin(s): |eps sin(u)|_mass <= eps
    const double got = gamma(be.F, b0.F, {0.0, 1.0}, us);
    CHECK(got > 0.0);
    CHECK(got <= 0.1 + 1e-12);

    // constant shift by a unit-X-norm vector measures exactly eps
    Nonlinearity f0;
    f0.space = be.space;
    f0.eval_raw = [](double, const Vector& u) { return (0.0 * u).eval(); };
    Nonlinearity fe = f0;
    const Vector c = Vector::Ones(16) / be.space->norm(Vector::Ones(16), NormKind::X);
    fe.eval_raw = [c](double, const Vector& u) { return (0.1 * c + 0.0 * u).eval(); };
    CHECK(gamma(fe, f0, {0.0}, us) == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("zero forcing reduces to the linear process", "[semilinear]") {
    TimeGrid grid{0.0, 1.0, 24, GridRule::Graded, 2.0};
    auto cfg = helpers::model_rd_config(10);
    cfg.f = nullptr;
    ProblemBundle b = build_reaction_diffusion(cfg, 0.0);
    SemigroupEvaluator ev(b.fam);
    EvolutionProcess proc = build_process(ev, solve_phi(ev, grid, {}), grid, {});
    Vector u0 = Vector::Ones(10);
    SemilinearOptions opts;
    opts.beta = 0.5;
    const Trajectory traj = solve_semilinear(proc, b.F, u0, grid, opts);
    for (int i : {6, 12, 24}) {
        const Vector ref = proc.at(i, 0) * u0;
        CHECK((traj.states[i] - ref).norm() < 1e-12);
    }
}

TEST_CASE("scalar linear closed form", "[semilinear]") {
    // A = 2, F = u: u(t) = e^{-(2-1) t} u0
    OperatorFamily fam{euclid(1), [](double) { return Matrix::Constant(1, 1, 2.0); }, 0.0, {}};
    SemigroupEvaluator ev(fam);
    TimeGrid grid{0.0, 1.0, 48, GridRule::Graded, 2.0};
    EvolutionProcess proc = build_process(ev, solve_phi(ev, grid, {}), grid, {});
    Nonlinearity F;
    F.space = fam.space;
    F.eval_raw = [](double, const Vector& u) { return u; };
    SemilinearOptions opts;
    const Trajectory traj = solve_semilinear(proc, F, Vector::Ones(1), grid, opts);
    CHECK(traj.states.back()(0) == Approx(std::exp(-1.0)).margin(2e-5));
    const auto picard = helpers::prop_picard_contraction(opts.residual_log);
    INFO(picard.what);
    CHECK(picard.pass);
}

TEST_CASE("reaction-diffusion trajectory matches the stiff ODE oracle", "[semilinear]") {
    const int n = 16;
    TimeGrid grid{0.0, 1.0, 48, GridRule::Graded, 2.0};
    RdSetup s = rd_setup(n, 0.0, grid);
    Vector u0(n);
    for (int i = 0; i < n; ++i) u0(i) = 1.0 + std::cos(M_PI * (i + 0.5) / n);
    SemilinearOptions opts;
    opts.beta = 0.5;
    const Trajectory traj = solve_semilinear(s.proc, s.bundle.F, u0, grid, opts);

    auto rhs = [&](double t, const Vector& u) -> Vector {
        return (-(s.bundle.fam.eval(t) * u) + s.bundle.F(t, u)).eval();
    };
    std::function<Vector(double, const Vector&)> f = rhs;
    const Vector ref = oracles::rk45<Vector>(f, u0, 0.0, 1.0, 1e-10, 1e-12);
    const double rel = s.bundle.space->norm(Vector(traj.states.back() - ref), NormKind::Y) /
                       s.bundle.space->norm(ref, NormKind::Y);
    INFO("Y-relative error " << rel);
    CHECK(rel < 1e-3);
}

TEST_CASE("solution distance basics", "[semilinear]") {
    TimeGrid grid{0.0, 1.0, 24, GridRule::Graded, 2.0};
    RdSetup s = rd_setup(12, 0.0, grid);
    Vector u0 = Vector::Ones(12) * 0.5;
    SemilinearOptions opts;
    opts.beta = 0.5;
    const Trajectory a = solve_semilinear(s.proc, s.bundle.F, u0, grid, opts);
    const auto zero = solution_distance(a, a, *s.bundle.space);
    for (const auto& [t, v] : zero) CHECK(v == 0.0);

    TimeGrid other{0.0, 1.0, 12, GridRule::Graded, 2.0};
    RdSetup so = rd_setup(12, 0.0, other);
    const Trajectory c = solve_semilinear(so.proc, so.bundle.F, u0, other, opts);
    CHECK_THROWS_AS(solution_distance(a, c, *s.bundle.space), GridMismatchError);
}

TEST_CASE("solution growth envelope", "[semilinear]") {
    TimeGrid grid{0.0, 1.0, 32, GridRule::Graded, 2.0};
    RdSetup s = rd_setup(16, 0.05, grid);
    Vector u0(16);
    for (int i = 0; i < 16; ++i) u0(i) = std::cos(M_PI * (i + 0.5) / 16.0);
    SemilinearOptions opts;
    opts.beta = 0.5;
    const Trajectory traj = solve_semilinear(s.proc, s.bundle.F, u0, grid, opts);
    const auto res = helpers::prop_solution_growth(traj, *s.bundle.space, 0.5);
    INFO(res.what);
    CHECK(res.pass);

    // refinement stability of the growth constant
    TimeGrid fine = grid.refined();
    RdSetup sf = rd_setup(16, 0.05, fine);
    const Trajectory traj_f = solve_semilinear(sf.proc, sf.bundle.F, u0, fine, opts);
    double c = 0.0, cf = 0.0;
    const double denom = 1.0 + s.bundle.space->norm(u0, NormKind::Y);
    for (std::size_t i = 1; i < traj.nodes.size(); ++i)
        c = std::max(c, std::sqrt(traj.nodes[i]) * traj.y_norms[i] / denom);
    for (std::size_t i = 1; i < traj_f.nodes.size(); ++i)
        cf = std::max(cf, std::sqrt(traj_f.nodes[i]) * traj_f.y_norms[i] / denom);
    CHECK(cf <= 1.25 * c + 1e-9);
}

TEST_CASE("picard failure modes", "[semilinear]") {
    // supercritical linear forcing: the iteration balloons past the guard
    OperatorFamily fam{std::make_shared<DiscreteSpace>(DiscreteSpace::euclidean(1)),
                       [](double) { return Matrix::Constant(1, 1, 1.0); },
                       0.0,
                       {}};
    SemigroupEvaluator ev(fam);
    TimeGrid grid{0.0, 1.0, 16, GridRule::Uniform, 1.0};
    const EvolutionProcess proc = build_process(ev, solve_phi(ev, grid, {}), grid, {});
    Nonlinearity F;
    F.space = fam.space;
    F.eval_raw = [](double, const Vector& u) { return (40.0 * u).eval(); };
    SemilinearOptions opts;
    CHECK_THROWS_AS(solve_semilinear(proc, F, Vector::Ones(1), grid, opts), BlowUpError);

    // benign forcing but a starved iteration budget
    Nonlinearity G;
    G.space = fam.space;
    G.eval_raw = [](double, const Vector& u) { return (0.5 * u).eval(); };
    SemilinearOptions starved;
    starved.max_iter = 1;
    try {
        solve_semilinear(proc, G, Vector::Ones(1), grid, starved);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual_history.size() == 1);
    }
}

TEST_CASE("dissipativity fit", "[semilinear]") {
    // f = s/2: holds with omega = 1/2, N = 0
    const auto fit = fit_dissipativity([](double, double s) { return 0.5 * s; }, {0.0, 1.0}, 50.0);
    CHECK(fit.omega == Approx(0.5));
    CHECK(fit.N == Approx(0.0).margin(1e-9));

    // f = tanh: any omega works, largest grid omega wins
    const auto fit2 = fit_dissipativity([](double, double s) { return std::tanh(s); }, {0.0}, 50.0);
    CHECK(fit2.omega == Approx(0.95));
    CHECK(fit2.N <= 1.0 / (4.0 * (1.0 - 0.95)) + 1e-9);

    // f = 2s violates the condition for every omega
    CHECK_THROWS_AS(fit_dissipativity([](double, double s) { return 2.0 * s; }, {0.0}, 50.0),
                    DomainError);
}

TEST_CASE("trajectory gap shrinks along the eps ladder", "[semilinear]") {
    // sup over a compact window and over sampled initial states of the
    // Y-distance between the eps and limiting flows decreases with eps
    // (up to 10% noise)
    TimeGrid grid{0.0, 1.0, 32, GridRule::Graded, 2.0};
    auto cfg = helpers::model_rd_config(12);
    const ProblemBundle b0 = build_reaction_diffusion(cfg, 0.0);
    SemigroupEvaluator ev0(b0.fam);
    const EvolutionProcess p0 = build_process(ev0, solve_phi(ev0, grid, {}), grid, {});

    std::vector<Vector> inits;
    std::mt19937_64 rng(57);
    std::normal_distribution<double> g;
    for (int k = 0; k < 3; ++k) {
        Vector u(12);
        for (int i = 0; i < 12; ++i) u(i) = 1.0 + 0.3 * g(rng);
        inits.push_back(u);
    }
    SemilinearOptions opts;
    opts.beta = 0.5;

    std::vector<double> gaps;
    for (double e : {1e-1, 3e-2, 1e-2}) {
        const ProblemBundle be = build_reaction_diffusion(cfg, e);
        SemigroupEvaluator eve(be.fam);
        const EvolutionProcess pe = build_process(eve, solve_phi(eve, grid, {}), grid, {});
        double sup = 0.0;
        for (const Vector& u0 : inits) {
            const Trajectory te = solve_semilinear(pe, be.F, u0, grid, opts);
            const Trajectory t0 = solve_semilinear(p0, b0.F, u0, grid, opts);
            for (const auto& [t, d] : solution_distance(te, t0, *b0.space))
                if (t >= 0.5) sup = std::max(sup, d);
        }
        gaps.push_back(sup);
    }
    INFO("gaps: " << gaps[0] << " " << gaps[1] << " " << gaps[2]);
    CHECK(gaps[1] <= 1.1 * gaps[0]);
    CHECK(gaps[2] <= 1.1 * gaps[1]);
    CHECK(gaps[2] < gaps[0]);
}

TEST_CASE("absorbing evidence: linear decay and uniform radius", "[semilinear]") {
    // F = 0 with a stable family: radius shrinks towards 0 as the horizon grows
    TimeGrid grid{0.0, 8.0, 64, GridRule::Uniform, 1.0};
    auto cfg = helpers::model_rd_config(8);
    cfg.f = nullptr;
    ProblemBundle b = build_reaction_diffusion(cfg, 0.0);
    SemigroupEvaluator ev(b.fam);
    EvolutionProcess proc = build_process(ev, solve_phi(ev, grid, {}), grid, {});
    std::vector<Vector> ball;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    for (int k = 0; k < 3; ++k) {
        Vector u(8);
        for (int i = 0; i < 8; ++i) u(i) = g(rng);
        ball.push_back(u * (5.0 / b.space->norm(u, NormKind::Y)));
    }
    SemilinearOptions opts;
    opts.beta = 0.5;
    const AbsorbingReport rep = absorbing_check({&proc}, {b.F}, ball, 8.0, opts);
    CHECK(rep.radius_E < 0.1); // e^{-4} * 5 plus discretization slack
    CHECK(rep.entry_times.size() == ball.size());
    for (double t : rep.entry_times) CHECK(t <= 8.0);
}
