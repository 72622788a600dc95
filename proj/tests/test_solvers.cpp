#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "rhb/bench.hpp"
#include "rhb/oracle.hpp"
#include "rhb/parser.hpp"
#include "rhb/recast.hpp"
#include "rhb/solvers.hpp"

using namespace rhb;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

AlgebraicProblem forced_linear(double omega, int N) {
    OdeSystem ode = parse_system("system lin { var x; forcing w = " + std::to_string(omega) +
                                 "; eq x'' + x = cos(w*t); }");
    PolySystem poly = recast(ode);
    HarmonicBasis basis = HarmonicBasis::single(omega, N);
    return assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);
}

} // namespace

TEST_CASE("newton converges in one step on the linear problem from the exact start") {
    AlgebraicProblem prob = forced_linear(0.5, 2);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
    // steady state x = cos(w t)/(1 - w^2): start exactly there
    x0[prob.layout.cos_coef(0, 1)] = 1.0 / (1.0 - 0.25);
    x0[prob.layout.sin_coef(1, 1)] = -0.5 / (1.0 - 0.25);
    SolverConfig cfg;
    cfg.method = SolveMethod::Newton;
    SolveReport rep = solve_newton(prob, x0, cfg);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 1);
    CHECK(rep.residual_norm <= 1e-13);
}

TEST_CASE("newton converges quadratically on the cubic system") {
    OdeSystem ode = parse_system(bench::corpus_source("duffing"));
    PolySystem poly = recast(ode);
    HarmonicBasis basis = HarmonicBasis::single(poly.forcing_omega, 5);
    AlgebraicProblem prob = assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);

    SolverConfig cfg;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
    x0[prob.layout.cos_coef(0, 1)] = 0.5;
    SolveReport seed = solve_lm(prob, x0, cfg);
    REQUIRE(seed.converged);

    // perturb and watch the Newton contraction orders
    Eigen::VectorXd start = seed.solution.data;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int i = 0; i < start.size(); ++i) start[i] += 2e-2 * uni(rng);
    cfg.method = SolveMethod::Newton;
    SolveReport rep = solve_newton(prob, start, cfg);
    REQUIRE(rep.converged);
    const auto& hist = rep.residual_history;
    REQUIRE(hist.size() >= 3);
    bool quadratic_seen = false;
    for (size_t k = 0; k + 2 < hist.size(); ++k) {
        if (hist[k] > 1.0 || hist[k + 2] < 1e-15) continue;
        double order = std::log(hist[k + 2] / hist[k + 1]) / std::log(hist[k + 1] / hist[k]);
        if (order > 1.5 && order < 3.0) quadratic_seen = true;
    }
    CHECK(quadratic_seen);
}

TEST_CASE("zero-residual start returns immediately") {
    AlgebraicProblem prob = forced_linear(0.5, 1);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
    x0[prob.layout.cos_coef(0, 1)] = 1.0 / 0.75;
    x0[prob.layout.sin_coef(1, 1)] = -0.5 / 0.75;
    SolverConfig cfg;
    SolveReport rep = solve_lm(prob, x0, cfg);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);
}

TEST_CASE("newton rejects non-square problems") {
    PolySystem poly = recast(parse_system(bench::corpus_source("relativistic")));
    HarmonicBasis basis = HarmonicBasis::single(0.8, 5);
    AlgebraicProblem prob =
        assemble(poly, basis, bench::scheme_for(poly, "relativistic", 3), Variant::RHB);
    REQUIRE(!prob.square());
    SolverConfig cfg;
    cfg.method = SolveMethod::Newton;
    SolveReport rep = solve_newton(prob, Eigen::VectorXd::Zero(prob.unknowns), cfg);
    CHECK_FALSE(rep.converged);
    CHECK(rep.failure.find("square") != std::string::npos);
}

TEST_CASE("accepted L-M steps strictly reduce the residual norm") {
    OdeSystem ode = parse_system(bench::corpus_source("duffing"));
    PolySystem poly = recast(ode);
    HarmonicBasis basis = HarmonicBasis::single(poly.forcing_omega, 7);
    AlgebraicProblem prob = assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    Eigen::VectorXd x0(prob.unknowns);
    for (int i = 0; i < x0.size(); ++i) x0[i] = uni(rng);
    SolverConfig cfg;
    SolveReport rep = solve_lm(prob, x0, cfg);
    for (size_t k = 1; k < rep.residual_history.size(); ++k)
        CHECK(rep.residual_history[k] < rep.residual_history[k - 1]);
}

TEST_CASE("converged reports satisfy the residual independently") {
    OdeSystem ode = parse_system(bench::corpus_source("duffing"));
    PolySystem poly = recast(ode);
    HarmonicBasis basis = HarmonicBasis::single(poly.forcing_omega, 7);
    AlgebraicProblem prob = assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
    x0[prob.layout.cos_coef(0, 1)] = 2.0;
    SolverConfig cfg;
    SolveReport rep = solve_lm(prob, x0, cfg);
    REQUIRE(rep.converged);
    CHECK(prob.residual(rep.solution.data).norm() <= cfg.tol_residual);
}

TEST_CASE("newton and L-M agree on well-conditioned square problems") {
    OdeSystem ode = parse_system(bench::corpus_source("duffing"));
    PolySystem poly = recast(ode);
    HarmonicBasis basis = HarmonicBasis::single(poly.forcing_omega, 3);
    AlgebraicProblem prob = assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
    x0[prob.layout.cos_coef(0, 1)] = 0.4;
    SolverConfig cfg;
    SolveReport lm = solve_lm(prob, x0, cfg);
    cfg.method = SolveMethod::Newton;
    SolveReport nw = solve_newton(prob, x0, cfg);
    REQUIRE(lm.converged);
    REQUIRE(nw.converged);
    CHECK((lm.solution.data - nw.solution.data).norm() <= 1e-8);
}

TEST_CASE("independent solves are safe to run concurrently") {
    OdeSystem ode = parse_system(bench::corpus_source("duffing"));
    PolySystem poly = recast(ode);
    HarmonicBasis basis = HarmonicBasis::single(poly.forcing_omega, 7);
    AlgebraicProblem prob = assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);
    SolverConfig cfg;

    auto start_at = [&](double a) {
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
        x0[prob.layout.cos_coef(0, 1)] = a;
        return x0;
    };
    SolveReport seq_a = solve_lm(prob, start_at(0.4), cfg);
    SolveReport seq_b = solve_lm(prob, start_at(2.2), cfg);

    SolveReport par_a, par_b;
    std::thread ta([&] { par_a = solve_lm(prob, start_at(0.4), cfg); });
    std::thread tb([&] { par_b = solve_lm(prob, start_at(2.2), cfg); });
    ta.join();
    tb.join();
    REQUIRE(par_a.converged);
    REQUIRE(par_b.converged);
    CHECK((par_a.solution.data - seq_a.solution.data).norm() == 0.0);
    CHECK((par_b.solution.data - seq_b.solution.data).norm() == 0.0);
}

TEST_CASE("linear sweep reproduces the closed-form response envelope") {
    std::vector<double> omegas;
    for (double w = 0.2; w < 0.85; w += 0.1) omegas.push_back(w);
    auto family = [](double w) { return forced_linear(w, 2); };
    AlgebraicProblem first = family(omegas[0]);
    SolverConfig cfg;
    auto reports = sweep(family, omegas, Eigen::VectorXd::Zero(first.unknowns), cfg);
    REQUIRE(reports.size() == omegas.size());
    for (size_t i = 0; i < reports.size(); ++i) {
        REQUIRE(reports[i].converged);
        double a = reports[i].solution.data[first.layout.cos_coef(0, 1)];
        CHECK(a == doctest::Approx(1.0 / (1.0 - omegas[i] * omegas[i])).epsilon(1e-10));
    }
}

TEST_CASE("duffing sweep shows the jump and the hysteresis window") {
    auto fwd = bench::run_sweep("duffing", 7, 1.0, 4.4, 69, false);
    auto bwd = bench::run_sweep("duffing", 7, 1.0, 4.4, 69, true);
    REQUIRE(fwd.size() == bwd.size());

    // forward amplitudes rise along the upper branch, then drop past the fold
    double max_jump_fwd = 0;
    for (size_t i = 1; i < fwd.size(); ++i)
        if (fwd[i].converged && fwd[i - 1].converged)
            max_jump_fwd = std::max(max_jump_fwd, fwd[i - 1].amplitude - fwd[i].amplitude);
    CHECK(max_jump_fwd > 0.5);

    // hysteresis: some frequencies carry two distinct converged responses
    std::vector<size_t> window;
    for (size_t i = 0; i < fwd.size(); ++i)
        if (fwd[i].converged && bwd[i].converged &&
            std::abs(fwd[i].amplitude - bwd[i].amplitude) > 0.5)
            window.push_back(i);
    REQUIRE(!window.empty());

    // the oracle confirms both responses at a frequency inside the window:
    // long integrations started from each branch's own state settle onto
    // distinct steady amplitudes
    OdeSystem ode = parse_system(bench::corpus_source("duffing"));
    PolySystem base = recast(ode);
    size_t gap_at = window[window.size() / 2];
    double w = fwd[gap_at].omega;
    double T = kTwoPi / w;
    PolySystem poly = base.with_forcing_omega(w);
    HarmonicBasis basis = HarmonicBasis::single(w, 13);
    AlgebraicProblem prob = assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);
    SolverConfig cfg;
    std::vector<double> steady;
    for (double branch_amp : {fwd[gap_at].amplitude, bwd[gap_at].amplitude}) {
        // phased first-harmonic seed from the amplitude equation
        double k = 0.75 * branch_amp * branch_amp + 1.0 - w * w;
        double den = k * k + 0.01 * w * w;
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
        x0[prob.layout.cos_coef(0, 1)] = 1.5 * k / den;
        x0[prob.layout.sin_coef(0, 1)] = 1.5 * 0.1 * w / den;
        SolveReport rep = solve_lm(prob, x0, cfg);
        REQUIRE(rep.converged);
        SeriesSolution s{basis, prob.layout, rep.solution.data, std::nullopt};
        std::vector<PointConstraint> init = {{"x", 0, s.eval(0, 0.0)},
                                             {"x__d1", 0, s.eval(0, 0.0, 1)}};
        Trajectory traj = integrate_reference(poly, init, 120.0 * T, T / 2048);
        steady.push_back(trajectory_amplitude(traj, "x", 119.0 * T, T));
    }
    CHECK(std::abs(steady[0] - steady[1]) > 0.5);
    CHECK(steady[0] == doctest::Approx(fwd[gap_at].amplitude).epsilon(0.02));
    CHECK(steady[1] == doctest::Approx(bwd[gap_at].amplitude).epsilon(0.02));
}

TEST_CASE("duffing branches agree with time integration at spot frequencies") {
    auto fwd = bench::run_sweep("duffing", 13, 1.2, 2.4, 25, false);
    OdeSystem ode = parse_system(bench::corpus_source("duffing"));
    PolySystem base = recast(ode);
    int checked = 0;
    for (size_t i = 0; i < fwd.size() && checked < 5; i += 5) {
        if (!fwd[i].converged) continue;
        double w = fwd[i].omega;
        PolySystem poly = base.with_forcing_omega(w);
        HarmonicBasis basis = HarmonicBasis::single(w, 13);
        AlgebraicProblem prob =
            assemble(poly, basis, BalanceScheme::full(poly, false), Variant::RHB);
        SolverConfig cfg;
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.unknowns);
        x0[prob.layout.cos_coef(0, 1)] = fwd[i].amplitude;
        SolveReport rep = solve_lm(prob, x0, cfg);
        if (!rep.converged) continue;
        SeriesSolution s{basis, prob.layout, rep.solution.data, std::nullopt};
        double T = kTwoPi / w;
        std::vector<PointConstraint> init = {{"x", 0, s.eval(0, 0.0)},
                                             {"x__d1", 0, s.eval(0, 0.0, 1)}};
        Trajectory traj = integrate_reference(poly, init, T, T / 8192);
        double dev = 0;
        for (size_t j = 0; j < traj.times.size(); ++j)
            dev = std::max(dev, std::abs(s.eval(0, traj.times[j]) - traj.states(j, 0)));
        CHECK(dev <= 1e-6 * std::max(1.0, fwd[i].amplitude));
        ++checked;
    }
    CHECK(checked >= 3);
}
