#ifndef RHB_BENCH_HPP
#define RHB_BENCH_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rhb/oracle.hpp"
#include "rhb/recast.hpp"
#include "rhb/solvers.hpp"

namespace rhb::bench {

/// One benchmark case: system text, discretization, scheme, solver settings,
/// oracle settings and pass thresholds.
struct CaseSpec {
    std::string name;
    std::string source;
    Variant variant = Variant::RHB;

    int order = 0;            // N (single-frequency)
    int trunc = 0;            // p; > 0 selects the dual-frequency mode
    double omega1 = 0.0;      // dual base frequencies
    double omega2 = 0.0;
    double omega0 = 1.0;      // initial response-frequency guess (conservative)
    int scheme = 0;           // 0 = case default

    SolverConfig solver;
    double oracle_step_divisor = 65536.0; // reference step = period / divisor
    bool oracle_on_recast = false;        // integrate the recast system instead
    int metric_var = 0;
    double metrics_window = 0.0;          // dual mode: comparison span (0 = 16 fast periods)
    // stage the dual solve through the odd-(m+n) sublattice first; for odd
    // nonlinearities the even modes are spurious directions that trap the
    // least-squares iteration
    bool warmup_odd_lattice = false;

    struct Seed {
        std::string var;
        int m = 0, n = 0;     // single: harmonic m (n ignored); 0 = constant term
        bool sine = false;
        double value = 0.0;
    };
    std::vector<Seed> seeds;

    double max_amplitude_error = 0.0; // 0 = not gated
    double max_mean_error = 0.0;
    double max_wall_seconds = 0.0;

    std::string trajectory_csv; // non-empty: dump the reference trajectory
};

struct CaseResult {
    std::string name;
    SolveReport solve;
    ErrorReport errors;                        // headline variable
    std::optional<ErrorReport> errors_secondary; // second variable (dual cases)
    bool pass = false;
    std::vector<std::string> failures;
    double wall_ms = 0.0;
    int degree = 0;
};

/// The builtin corpus: duffing, vdp, rayleigh_plesset, relativistic,
/// pendulum, asym_pendulum.
std::vector<std::string> corpus_names();
std::string corpus_source(const std::string& name);

/// Canonical parameters for a builtin case (paper settings).
CaseSpec builtin_case(const std::string& name);

/// Balance scheme catalogue per case; scheme_no 0 picks the case default.
BalanceScheme scheme_for(const PolySystem& sys, const std::string& case_name, int scheme_no);

/// parse -> recast -> assemble -> solve -> oracle compare.
CaseResult run_case(const CaseSpec& spec);

struct SchemeStudyEntry {
    int scheme = 0;
    CaseResult result;
};
/// Runs `pendulum` or `relativistic` under each constraint scheme; entries
/// are ordered by mean error (best first).
std::vector<SchemeStudyEntry> run_scheme_study(const std::string& case_name,
                                               SolveMethod method = SolveMethod::LevenbergMarquardt);

struct MonteCarloResult {
    Variant variant = Variant::RHB;
    int trials = 0;
    std::uint64_t seed = 0;
    int order = 0;
    int upper = 0, lower = 0, unstable = 0, non_physical = 0, diverged = 0;
    std::array<double, 3> branch_amplitudes{}; // lower, unstable, upper

    double pct(int k) const { return 100.0 * k / std::max(1, trials); }
};
/// Duffing Monte-Carlo study at the bifurcation frequency: random coefficient
/// starts in [-2, 2], converged solutions classified against one period of
/// time integration started from the solution's own initial state. Random
/// mode requires >= 100 trials; `start_override` pins every trial to one
/// start instead (classifier tests).
MonteCarloResult run_monte_carlo(Variant variant, int trials, std::uint64_t seed,
                                 const Eigen::VectorXd* start_override = nullptr);

/// The assembled balance stack the Monte-Carlo trials solve (single-variable
/// second-order form); exposed so tests can construct consistent starts.
AlgebraicProblem monte_carlo_problem(Variant variant);

struct SweepPoint {
    double omega = 0.0;
    bool converged = false;
    double amplitude = 0.0;
    int iterations = 0;
    double residual = 0.0;
};
std::vector<SweepPoint> run_sweep(const std::string& case_name, int order, double from,
                                  double to, int points, bool backward);

nlohmann::ordered_json case_report_json(const CaseResult& r);
nlohmann::ordered_json mc_report_json(const MonteCarloResult& r);
void emit_case_reports(const std::vector<CaseResult>& results, const std::string& format,
                       std::ostream& out);
void emit_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out);

struct Criterion {
    int id = 0;
    std::string label;
    bool pass = false;
    std::string detail;
};
/// The acceptance suite; prints one pass/fail line per criterion to `log`.
std::vector<Criterion> run_acceptance(std::ostream& log);

} // namespace rhb::bench

#endif
