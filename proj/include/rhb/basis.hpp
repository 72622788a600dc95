#ifndef RHB_BASIS_HPP
#define RHB_BASIS_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rhb {

/// Truncated Fourier basis. Single mode spans harmonics 1..N of one base
/// frequency; dual mode spans the combination lattice {m w1 + n w2} with
/// |m| + |n| <= p, sign-normalized to nonnegative effective frequency,
/// duplicates removed, ordered by (|m|+|n|, m, n). The constant term is
/// carried separately in the coefficient layout.
struct HarmonicBasis {
    enum class Mode { Single, Dual };
    Mode mode = Mode::Single;

    // single
    double omega = 1.0;
    int order = 0; // N

    // dual
    double omega1 = 0.0, omega2 = 0.0;
    int trunc = 0; // p
    std::vector<std::pair<int, int>> lattice;

    std::vector<double> frequencies; // per-harmonic angular frequency, size N_h

    int harmonic_count() const { return int(frequencies.size()); } // N_h
    int block_size() const { return 2 * harmonic_count() + 1; }

    static HarmonicBasis single(double omega, int N);
    static HarmonicBasis dual(double omega1, double omega2, int p);
    /// Dual basis with the lattice filtered by a predicate (used to study the
    /// reduction onto a single frequency).
    static HarmonicBasis dual_restricted(double omega1, double omega2, int p,
                                         const std::function<bool(int, int)>& keep);
};

/// Index bookkeeping for the stacked coefficient vector: per variable
/// [a0, a1, b1, ..., aN, bN], optionally followed by the unknown omega.
struct SpectrumLayout {
    int n_vars = 0;
    int n_h = 0;
    bool has_omega = false;

    int block() const { return 2 * n_h + 1; }
    int size() const { return n_vars * block() + (has_omega ? 1 : 0); }
    int at(int var, int coeff) const { return var * block() + coeff; }
    int constant(int var) const { return at(var, 0); }
    int cos_coef(int var, int n) const { return at(var, 2 * n - 1); }
    int sin_coef(int var, int n) const { return at(var, 2 * n); }
    int omega_index() const { return n_vars * block(); }
};

/// The unknown coefficient stack.
struct FourierVector {
    SpectrumLayout layout;
    Eigen::VectorXd data;

    double a(int var, int n) const { return n == 0 ? data[layout.constant(var)] : data[layout.cos_coef(var, n)]; }
    double b(int var, int n) const { return data[layout.sin_coef(var, n)]; }
    double omega() const { return layout.has_omega ? data[layout.omega_index()] : 0.0; }
};

/// Collocation sample times. Single-frequency grids are uniform over one
/// period; dual grids are uniform over the common
/// period 2 pi / gcd when the frequency ratio rationalizes, otherwise low-discrepancy over a beat window
/// (the least-squares fallback).
struct CollocationGrid {
    int samples = 0;      // M
    double period = 0.0;  // T (window length for the fallback grid)
    std::vector<double> times;
    bool fallback = false;

    static CollocationGrid uniform(int M, double period);
    static CollocationGrid low_discrepancy(int M, double window);
};

/// Evaluates the truncated series (or its time derivative of given order)
/// for one variable at time t. `omega` overrides the basis frequency in
/// single mode (the unknown-omega case); ignored in dual mode.
double eval_series(const HarmonicBasis& basis, const SpectrumLayout& layout,
                   const Eigen::VectorXd& coeffs, int var, double t,
                   int deriv_order = 0, std::optional<double> omega = std::nullopt);

} // namespace rhb

#endif
