#ifndef RHB_SOLVERS_HPP
#define RHB_SOLVERS_HPP

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rhb/assemble.hpp"

namespace rhb {

enum class SolveMethod { Newton, LevenbergMarquardt };

struct SolverConfig {
    SolveMethod method = SolveMethod::LevenbergMarquardt;
    int max_iterations = 200;
    double tol_residual = 1e-12; // 2-norm
    double tol_step = 1e-12;     // infinity norm
    double lambda0 = 1e-3;
    double lambda_factor = 10.0;

    void validate() const;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double residual_norm = 0.0;
    FourierVector solution;
    double omega = 0.0; // recovered response frequency (or the fixed base)
    double wall_seconds = 0.0;
    std::string method;
    std::string variant;
    std::string basis_mode;      // "single" | "dual"
    int basis_order = 0;         // N or p
    std::vector<double> omegas;  // base frequencies
    int grid_samples = 0;
    double grid_period = 0.0;
    bool fallback_grid = false;
    std::string failure;                 // empty when converged
    std::vector<double> residual_history; // ||F|| per accepted iterate
};

/// Newton-Raphson on a square problem. Reports failure on a singular
/// Jacobian.
SolveReport solve_newton(const AlgebraicProblem& problem, const Eigen::VectorXd& x0,
                         const SolverConfig& cfg);

/// Levenberg-Marquardt with the diagonal damping
/// (J^T J + lambda diag(J^T J)) step and tenfold lambda rescaling; rejected
/// steps restore the iterate.
SolveReport solve_lm(const AlgebraicProblem& problem, const Eigen::VectorXd& x0,
                     const SolverConfig& cfg);

SolveReport solve(const AlgebraicProblem& problem, const Eigen::VectorXd& x0,
                  const SolverConfig& cfg);

/// Warm-started parameter sweep: each solve starts from the previous
/// converged solution, falling back to `restarts` (tried in order) when the
/// warm start fails. Per-point failures are recorded and the sweep continues.
std::vector<SolveReport> sweep(const std::function<AlgebraicProblem(double)>& family,
                               std::span<const double> parameters,
                               const Eigen::VectorXd& x0, const SolverConfig& cfg,
                               const std::vector<Eigen::VectorXd>& restarts = {});

} // namespace rhb

#endif
