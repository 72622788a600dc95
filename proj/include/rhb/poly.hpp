#ifndef RHB_POLY_HPP
#define RHB_POLY_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rhb/expr.hpp"
#include <nlohmann/json_fwd.hpp>

namespace rhb {

/// One power of one (variable, derivative-order) slot inside a monomial.
struct Factor {
    int var = 0;
    int deriv_order = 0; // 0 = the variable itself
    int exponent = 1;    // >= 1
};

struct ForcingFactor {
    int multiple = 1;
    Phase phase = Phase::Cos;
};

/// coeff * prod factors * [cos|sin](multiple * omega_f * t).
/// Factors are kept sorted by (var, deriv_order); at most one forcing factor.
struct Monomial {
    double coeff = 0.0;
    std::vector<Factor> factors;
    std::optional<ForcingFactor> forcing;

    int degree() const; // sum of exponents, derivative factors count like variables
    void normalize();   // sort + merge duplicate factors
};

struct PolyEquation {
    enum class Kind { Differential, Algebraic };
    Kind kind = Kind::Algebraic;
    int lhs_var = -1; // Differential: equation reads d/dt var = sum(monomials)
    std::vector<Monomial> monomials;
};

/// A (var, deriv_order) pair whose value the evaluator needs.
struct Slot {
    int var = 0;
    int order = 0;
    bool operator==(const Slot&) const = default;
};

/// Definition of a companion variable in terms of the pre-recast variables,
/// recorded so tests can substitute exact values.
struct CompanionDef {
    std::string name;
    ExprPtr definition;
};

/// Polynomial differential-algebraic system: the common currency between the
/// recast compiler and the HB engine. Immutable after construction.
class PolySystem {
public:
    std::string name;
    std::vector<std::string> vars;
    std::vector<PolyEquation> equations;
    std::optional<std::string> forcing_symbol;
    double forcing_omega = 0.0;
    bool conservative = false;
    std::vector<PointConstraint> constraints; // var names refer to `vars`
    std::vector<CompanionDef> companions;     // introduced by recast, in order

    /// Finalizes slot tables and sanity-checks invariants. Call once after
    /// filling the fields above.
    void finalize();

    int var_index(const std::string& v) const;
    int degree() const { return degree_; } // nonlinearity degree, >= 1

    const std::vector<Slot>& slots() const { return slots_; }
    int slot_index(int var, int order) const; // -1 when absent
    int max_deriv_order() const { return max_order_; }

    /// Evaluates all equations at one state. `slot_values` is ordered like
    /// slots(); `forcing_phase` is omega_f * t. Differential equations yield
    /// their right-hand side, algebraic equations their residual.
    Eigen::VectorXd eval_rhs(const Eigen::VectorXd& slot_values, double forcing_phase = 0.0) const;

    /// Convenience overload taking (name, order) -> value; throws on a
    /// missing entry.
    Eigen::VectorXd eval_rhs(const StateFn& state, double forcing_phase = 0.0) const;

    /// d(eval_rhs)/d(slot) as an equations x slots matrix.
    Eigen::MatrixXd eval_partials(const Eigen::VectorXd& slot_values, double forcing_phase = 0.0) const;

    /// Copy with a different forcing frequency (used by sweeps).
    PolySystem with_forcing_omega(double omega) const;

    std::string canonical_text() const;
    nlohmann::ordered_json to_json() const;

private:
    int degree_ = 1;
    int max_order_ = 0;
    std::vector<Slot> slots_;
};

/// Maximum monomial degree of the system (phi), derivative factors counting
/// one degree per exponent.
int degree_of(const PolySystem& sys);

} // namespace rhb

#endif
