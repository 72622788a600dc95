#ifndef RHB_EXPR_HPP
#define RHB_EXPR_HPP

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rhb {

/// Syntax tree for the user's (possibly transcendental) differential system.
/// Nodes are immutable; subtrees may be shared.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind {
    Constant,    // real literal
    Var,         // state-variable reference
    Deriv,       // d^k/dt^k of a state variable, k >= 1
    Harmonic,    // amplitude * cos/sin(multiple * omega_f * t), forcing term
    Sum,         // n-ary, flattened
    Product,     // n-ary, flattened
    IntPow,      // child ^ integer exponent
    RatPow,      // child ^ (q/p), p >= 2, gcd(|q|, p) = 1
    Elementary   // exp, log_a, sin, cos, tan, asin, acos, atan
};

enum class Phase { Cos, Sin };

enum class ElemFn { Exp, Log, Sin, Cos, Tan, Asin, Acos, Atan };

struct Expr {
    ExprKind kind;

    double value = 0.0;            // Constant
    std::string name;              // Var / Deriv / Harmonic base-frequency symbol
    int order = 0;                 // Deriv
    double amplitude = 1.0;        // Harmonic
    int multiple = 1;              // Harmonic
    Phase phase = Phase::Cos;      // Harmonic
    int ipow = 0;                  // IntPow
    int rat_q = 0, rat_p = 1;      // RatPow
    ElemFn fn = ElemFn::Exp;       // Elementary
    double log_base = 0.0;         // Elementary Log
    std::vector<ExprPtr> children; // Sum / Product / IntPow / RatPow / Elementary
};

ExprPtr make_const(double v);
ExprPtr make_var(std::string name);
ExprPtr make_deriv(std::string name, int order);
ExprPtr make_harmonic(double amplitude, int multiple, Phase phase, std::string freq_symbol);
ExprPtr make_sum(std::vector<ExprPtr> terms);       // flattens nested sums
ExprPtr make_product(std::vector<ExprPtr> factors); // flattens nested products
ExprPtr make_int_pow(ExprPtr base, int exponent);
ExprPtr make_rat_pow(ExprPtr base, int q, int p);   // normalizes the fraction
ExprPtr make_elem(ElemFn fn, ExprPtr arg, double log_base = 0.0);
ExprPtr negate(const ExprPtr& e);

bool expr_equal(const ExprPtr& a, const ExprPtr& b);

/// Renders the expression in the source grammar (round-trip safe: constants
/// are printed with 17 significant digits).
std::string expr_to_string(const ExprPtr& e);

/// State accessor used by evaluation: (variable name, derivative order) -> value.
using StateFn = std::function<double(const std::string&, int)>;

/// Evaluates the tree. `forcing_phase` is the angle omega_f * t used by
/// Harmonic nodes; pass 0 when no forcing is present.
double eval_expr(const ExprPtr& e, const StateFn& state, double forcing_phase = 0.0);

/// Symbolic d/dt. Harmonic nodes are rejected (forcing terms never appear
/// inside recast arguments).
ExprPtr differentiate_time(const ExprPtr& e);

/// Point constraint x^(order)(0) = value.
struct PointConstraint {
    std::string var;
    int order = 0;
    double value = 0.0;
};

/// Parsed differential system, equations held in residual form (expr = 0).
struct OdeSystem {
    std::string name;
    std::vector<std::string> vars;
    std::vector<ExprPtr> equations;
    std::optional<std::string> forcing_symbol;
    double forcing_omega = 0.0;
    bool conservative = false;
    std::vector<PointConstraint> constraints;

    int var_index(const std::string& v) const;
};

bool system_equal(const OdeSystem& a, const OdeSystem& b);
std::string system_to_string(const OdeSystem& sys);

struct RecastError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rhb

#endif
