#include "rhb/solvers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rhb {

namespace {

using Clock = std::chrono::steady_clock;

SolveReport make_report(const AlgebraicProblem& p, const char* method) {
    SolveReport r;
    r.method = method;
    r.variant = variant_name(p.variant);
    if (p.basis.mode == HarmonicBasis::Mode::Single) {
        r.basis_mode = "single";
        r.basis_order = p.basis.order;
        r.omegas = {p.basis.omega};
    } else {
        r.basis_mode = "dual";
        r.basis_order = p.basis.trunc;
        r.omegas = {p.basis.omega1, p.basis.omega2};
    }
    r.grid_samples = p.grid.samples;
    r.grid_period = p.grid.period;
    r.fallback_grid = p.fallback_grid;
    return r;
}

void finish(SolveReport& r, const AlgebraicProblem& p, const Eigen::VectorXd& x,
            double rnorm, Clock::time_point t0) {
    r.residual_norm = rnorm;
    r.solution.layout = p.layout;
    r.solution.data = x;
    r.omega = p.layout.has_omega ? x[p.layout.omega_index()]
              : p.basis.mode == HarmonicBasis::Mode::Single ? p.basis.omega
                                                            : p.basis.omega1;
    // single-frequency grids are phase-normalized; report the physical period
    if (p.basis.mode == HarmonicBasis::Mode::Single && r.omega != 0.0)
        r.grid_period = 6.28318530717958647692 / r.omega;
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

void SolverConfig::validate() const {
    if (tol_residual <= 0 || tol_step <= 0) throw std::invalid_argument("tolerances must be > 0");
    if (lambda_factor <= 1.0) throw std::invalid_argument("damping factor must be > 1");
    if (max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
}

SolveReport solve_newton(const AlgebraicProblem& problem, const Eigen::VectorXd& x0,
                         const SolverConfig& cfg) {
    cfg.validate();
    auto t0 = Clock::now();
    SolveReport rep = make_report(problem, "newton");
    if (!problem.square()) {
        rep.failure = "newton requires a square problem (" + std::to_string(problem.equations) +
                      " rows, " + std::to_string(problem.unknowns) + " unknowns)";
        finish(rep, problem, x0, problem.residual(x0).norm(), t0);
        return rep;
    }

    Eigen::VectorXd x = x0;
    Eigen::VectorXd F = problem.residual(x);
    double rnorm = F.norm();
    rep.residual_history.push_back(rnorm);

    for (int it = 0; it < cfg.max_iterations; ++it) {
        if (rnorm <= cfg.tol_residual) {
            rep.converged = true;
            rep.iterations = it;
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
        Eigen::MatrixXd J = problem.jacobian(x);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) {
            rep.iterations = it;
            rep.failure = "singular Jacobian at iteration " + std::to_string(it);
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
        Eigen::VectorXd step = lu.solve(F);
        if (!step.allFinite()) {
            rep.iterations = it;
            rep.failure = "non-finite Newton step at iteration " + std::to_string(it);
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
        x -= step;
        F = problem.residual(x);
        rnorm = F.norm();
        rep.residual_history.push_back(rnorm);
        if (!std::isfinite(rnorm)) {
            rep.iterations = it + 1;
            rep.failure = "residual diverged";
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
        if (rnorm <= cfg.tol_residual && step.lpNorm<Eigen::Infinity>() <= cfg.tol_step) {
            rep.converged = true;
            rep.iterations = it + 1;
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
    }
    rep.iterations = cfg.max_iterations;
    if (rnorm <= cfg.tol_residual)
        rep.converged = true;
    else
        rep.failure = "max iterations exceeded";
    finish(rep, problem, x, rnorm, t0);
    return rep;
}

SolveReport solve_lm(const AlgebraicProblem& problem, const Eigen::VectorXd& x0,
                     const SolverConfig& cfg) {
    cfg.validate();
    auto t0 = Clock::now();
    SolveReport rep = make_report(problem, "lm");

    Eigen::VectorXd x = x0;
    Eigen::VectorXd F = problem.residual(x);
    double rnorm = F.norm();
    rep.residual_history.push_back(rnorm);
    double lambda = cfg.lambda0;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        if (rnorm <= cfg.tol_residual) {
            rep.converged = true;
            rep.iterations = it;
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
        Eigen::MatrixXd J = problem.jacobian(x);
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd JtF = J.transpose() * F;
        Eigen::VectorXd diag = JtJ.diagonal();
        double floor = 1e-12 * std::max(1.0, diag.maxCoeff());
        for (int i = 0; i < diag.size(); ++i) diag[i] = std::max(diag[i], floor);

        // escalate lambda until a step reduces ||F||
        bool accepted = false;
        double step_inf = 0.0;
        while (lambda <= 1e12) {
            Eigen::MatrixXd Awork = JtJ;
            Awork.diagonal() += lambda * diag;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Awork);
            Eigen::VectorXd step = ldlt.solve(JtF);
            if (ldlt.info() == Eigen::Success && step.allFinite()) {
                Eigen::VectorXd xt = x - step;
                Eigen::VectorXd Ft = problem.residual(xt);
                double rt = Ft.norm();
                if (std::isfinite(rt) && rt < rnorm) {
                    x = xt;
                    F = Ft;
                    rnorm = rt;
                    step_inf = step.lpNorm<Eigen::Infinity>();
                    lambda = std::max(lambda / cfg.lambda_factor, 1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= cfg.lambda_factor;
        }
        if (!accepted) {
            rep.iterations = it;
            rep.failure = rnorm <= cfg.tol_residual
                              ? ""
                              : "damping escalation exceeded lambda = 1e12";
            rep.converged = rnorm <= cfg.tol_residual;
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
        rep.residual_history.push_back(rnorm);
        if (rnorm <= cfg.tol_residual && step_inf <= cfg.tol_step) {
            rep.converged = true;
            rep.iterations = it + 1;
            finish(rep, problem, x, rnorm, t0);
            return rep;
        }
    }
    rep.iterations = cfg.max_iterations;
    if (rnorm <= cfg.tol_residual)
        rep.converged = true;
    else
        rep.failure = "max iterations exceeded";
    finish(rep, problem, x, rnorm, t0);
    return rep;
}

SolveReport solve(const AlgebraicProblem& problem, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg) {
    return cfg.method == SolveMethod::Newton ? solve_newton(problem, x0, cfg)
                                             : solve_lm(problem, x0, cfg);
}

std::vector<SolveReport> sweep(const std::function<AlgebraicProblem(double)>& family,
                               std::span<const double> parameters,
                               const Eigen::VectorXd& x0, const SolverConfig& cfg,
                               const std::vector<Eigen::VectorXd>& restarts) {
    std::vector<SolveReport> out;
    Eigen::VectorXd start = x0;
    for (double p : parameters) {
        AlgebraicProblem prob = family(p);
        SolveReport rep = solve(prob, start, cfg);
        for (size_t r = 0; !rep.converged && r < restarts.size(); ++r)
            rep = solve(prob, restarts[r], cfg);
        if (rep.converged) start = rep.solution.data;
        out.push_back(std::move(rep));
    }
    return out;
}

} // namespace rhb
