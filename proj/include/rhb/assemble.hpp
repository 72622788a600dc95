#ifndef RHB_ASSEMBLE_HPP
#define RHB_ASSEMBLE_HPP

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rhb/basis.hpp"
#include "rhb/poly.hpp"

namespace rhb {

enum class Variant { RHB, HDHB, AFT };

std::string variant_name(Variant v);

/// Balance selection: per-equation harmonic range plus the point constraints
/// appended as extra rows.
struct BalanceScheme {
    struct Range {
        int first = 0; // 0 = include the constant row
        int last = -1; // -1 = up to N_h
    };
    std::vector<Range> ranges; // one per equation; empty = full balance everywhere
    std::vector<PointConstraint> constraints;

    static BalanceScheme full(const PolySystem& sys, bool with_constraints = true);
};

/// Derivative matrix acting on one variable block. Single mode: block-diagonal
/// diag(0, J_1, ..., J_N) with J_n = n [[0, 1], [-1, 0]] (the base frequency
/// is factored out and applied by the residual). Dual mode: the k-th block
/// carries the absolute effective frequency m w1 + n w2.
Eigen::MatrixXd build_A(const HarmonicBasis& basis);

/// Evaluation matrix: row j is [1, cos w_1 t_j, sin w_1 t_j, ...].
Eigen::MatrixXd build_E(const HarmonicBasis& basis, const CollocationGrid& grid);

/// Left inverse with E* E = I. Uniform grids use the closed trigonometric
/// form (2/M) [1/2; cos; sin; ...]; fallback grids use the least-squares
/// pseudo-inverse.
Eigen::MatrixXd build_pinv(const HarmonicBasis& basis, const CollocationGrid& grid);

/// Smallest alias-free sample count: single mode M = (phi+1) N + 1. For a
/// commensurate dual basis, M = floor((phi+1) p max(w1,w2)/gcd) + 1 with
/// sampling period 2 pi / gcd. Returns nullopt when the frequency ratio does
/// not rationalize under the configured tolerance (caller falls back).
struct DualSampling {
    int samples = 0;
    double period = 0.0;
};
int min_collocation(int phi, const HarmonicBasis& basis); // single mode
std::optional<DualSampling> min_collocation_dual(int phi, const HarmonicBasis& basis);

/// Sample count per method variant: HDHB 2N+1, AFT 2 phi N + 1, RHB the
/// smallest alias-free count.
CollocationGrid variant_grid(Variant variant, int phi, const HarmonicBasis& basis);

/// Mixing rule: the harmonic index n is observed as n_a = n - 2 m L with
/// n_a in [-L, L]; ties at |n_a| = L resolve to the smallest |m|.
int alias_of(int n, int L);

/// Assembled nonlinear algebraic system in the frequency domain.
struct AlgebraicProblem {
    int unknowns = 0;
    int equations = 0;
    Variant variant = Variant::RHB;
    SpectrumLayout layout;
    HarmonicBasis basis;
    CollocationGrid grid;
    bool fallback_grid = false;

    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;

    bool square() const { return unknowns == equations; }
};

/// Builds the balanced residual/Jacobian for the given polynomial system.
/// Differential equations contribute the selected rows of
/// omega A x - E* f(E x) (dual mode: A x - E* f, absolute frequencies in A);
/// algebraic equations contribute E* g(E x); point constraints evaluate the
/// ansatz at t = 0. Derivative factors inside monomials are realized
/// spectrally through powers of A.
AlgebraicProblem assemble(const PolySystem& sys, const HarmonicBasis& basis,
                          const BalanceScheme& scheme, Variant variant);

/// Same, on an explicit grid (tests and the dual-mode fallback use this).
AlgebraicProblem assemble_on_grid(const PolySystem& sys, const HarmonicBasis& basis,
                                  const BalanceScheme& scheme, Variant variant,
                                  const CollocationGrid& grid);

} // namespace rhb

#endif
