#ifndef RHB_ORACLE_HPP
#define RHB_ORACLE_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rhb/basis.hpp"
#include "rhb/expr.hpp"
#include "rhb/poly.hpp"

namespace rhb {

/// Fixed-step reference trajectory. Column layout in `states` follows
/// `labels` (per variable: the value, then its derivative chain).
struct Trajectory {
    std::vector<double> times;
    Eigen::MatrixXd states; // row j = state at times[j]
    std::vector<std::string> labels;
    double step = 0.0;
    std::string method = "rk4";

    int column(const std::string& label) const;
};

struct ErrorReport {
    double amplitude_error = 0.0;
    double mean_abs_error = 0.0;
    double max_error = 0.0;
    double period = 0.0;
    std::vector<double> curve_times;
    std::vector<double> curve_errors;
};

/// Classical fourth-order explicit integration. Residual equations that are
/// affine in their top-order derivatives are resolved through a small linear
/// solve each stage (the mass-matrix form of acceleration-coupled systems).
Trajectory integrate_reference(const OdeSystem& sys,
                               const std::vector<PointConstraint>& initial,
                               double horizon, double step);

/// Same for polynomial systems whose variables all carry differential rows
/// (derivative factors inside monomials are resolved through the algebraic
/// rows). Pure algebraic companion rows are rejected: integrate the original
/// system instead.
Trajectory integrate_reference(const PolySystem& sys,
                               const std::vector<PointConstraint>& initial,
                               double horizon, double step);

/// Truncated Fourier coefficients [r0, r1c, r1s, ..., rNc, rNs] of uniformly
/// sampled values over one period, by composite quadrature of the projection
/// integrals. Requires at least 64 N samples.
Eigen::VectorXd fourier_bruteforce(std::span<const double> samples, int N);

/// A solved coefficient stack bundled with its basis for evaluation.
struct SeriesSolution {
    HarmonicBasis basis;
    SpectrumLayout layout;
    Eigen::VectorXd coeffs;
    std::optional<double> omega; // single mode with unknown frequency

    double eval(int var, double t, int deriv_order = 0) const {
        return eval_series(basis, layout, coeffs, var, t, deriv_order, omega);
    }
    /// Max |value| over [t0, t0 + span], refined by Newton on the series
    /// derivative.
    double amplitude(int var, double t0, double span) const;
};

/// Amplitude / mean / max error of the truncated series against a reference
/// trajectory over [t0, t0 + span] at the reference sample times.
ErrorReport error_metrics(const SeriesSolution& approx, int approx_var,
                          const Trajectory& reference, const std::string& ref_label,
                          double t0, double span);

/// Max |column| over the trajectory, polished by a local quartic fit.
double trajectory_amplitude(const Trajectory& traj, const std::string& label,
                            double t0, double span);

/// Oscillation period from successive derivative-column zero crossings,
/// polished by local polynomial fits (for trajectories started at a turning
/// point).
double measure_period(const Trajectory& traj, const std::string& deriv_label);

/// Dominant angular frequencies from windowed FFT magnitude peaks across all
/// trajectory columns, refined by quadratic interpolation of log magnitudes.
/// Throws when fewer than `count` distinct peaks exist.
std::vector<double> estimate_base_frequencies(const Trajectory& traj, int count = 2);

/// CSV export, header "t,<labels...>".
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

} // namespace rhb

#endif
