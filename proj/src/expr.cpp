#include "rhb/expr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rhb {

namespace {

std::shared_ptr<Expr> node(ExprKind k) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    return e;
}

} // namespace

ExprPtr make_const(double v) {
    auto e = node(ExprKind::Constant);
    e->value = v;
    return e;
}

ExprPtr make_var(std::string name) {
    auto e = node(ExprKind::Var);
    e->name = std::move(name);
    return e;
}

ExprPtr make_deriv(std::string name, int order) {
    if (order < 1) throw RecastError("derivative order must be >= 1");
    auto e = node(ExprKind::Deriv);
    e->name = std::move(name);
    e->order = order;
    return e;
}

ExprPtr make_harmonic(double amplitude, int multiple, Phase phase, std::string freq_symbol) {
    if (multiple < 1) throw RecastError("harmonic multiple must be a positive integer");
    auto e = node(ExprKind::Harmonic);
    e->amplitude = amplitude;
    e->multiple = multiple;
    e->phase = phase;
    e->name = std::move(freq_symbol);
    return e;
}

ExprPtr make_sum(std::vector<ExprPtr> terms) {
    std::vector<ExprPtr> flat;
    for (auto& t : terms) {
        if (t->kind == ExprKind::Sum)
            flat.insert(flat.end(), t->children.begin(), t->children.end());
        else
            flat.push_back(t);
    }
    if (flat.size() == 1) return flat[0];
    auto e = node(ExprKind::Sum);
    e->children = std::move(flat);
    return e;
}

ExprPtr make_product(std::vector<ExprPtr> factors) {
    std::vector<ExprPtr> flat;
    for (auto& f : factors) {
        if (f->kind == ExprKind::Product)
            flat.insert(flat.end(), f->children.begin(), f->children.end());
        else
            flat.push_back(f);
    }
    if (flat.size() == 1) return flat[0];
    auto e = node(ExprKind::Product);
    e->children = std::move(flat);
    return e;
}

ExprPtr make_int_pow(ExprPtr base, int exponent) {
    if (exponent == 1) return base;
    auto e = node(ExprKind::IntPow);
    e->ipow = exponent;
    e->children = {std::move(base)};
    return e;
}

ExprPtr make_rat_pow(ExprPtr base, int q, int p) {
    if (p < 1) throw RecastError("rational power requires p >= 1");
    int g = std::gcd(std::abs(q), p);
    if (g > 1) { q /= g; p /= g; }
    if (p == 1) return make_int_pow(std::move(base), q);
    auto e = node(ExprKind::RatPow);
    e->rat_q = q;
    e->rat_p = p;
    e->children = {std::move(base)};
    return e;
}

ExprPtr make_elem(ElemFn fn, ExprPtr arg, double log_base) {
    auto e = node(ExprKind::Elementary);
    e->fn = fn;
    e->log_base = log_base;
    e->children = {std::move(arg)};
    return e;
}

ExprPtr negate(const ExprPtr& e) {
    if (e->kind == ExprKind::Constant) return make_const(-e->value);
    return make_product({make_const(-1.0), e});
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a.get() == b.get()) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case ExprKind::Constant: return a->value == b->value;
    case ExprKind::Var: return a->name == b->name;
    case ExprKind::Deriv: return a->name == b->name && a->order == b->order;
    case ExprKind::Harmonic:
        return a->amplitude == b->amplitude && a->multiple == b->multiple &&
               a->phase == b->phase && a->name == b->name;
    case ExprKind::IntPow:
        if (a->ipow != b->ipow) return false;
        break;
    case ExprKind::RatPow:
        if (a->rat_q != b->rat_q || a->rat_p != b->rat_p) return false;
        break;
    case ExprKind::Elementary:
        if (a->fn != b->fn || a->log_base != b->log_base) return false;
        break;
    default: break;
    }
    if (a->children.size() != b->children.size()) return false;
    for (size_t i = 0; i < a->children.size(); ++i)
        if (!expr_equal(a->children[i], b->children[i])) return false;
    return true;
}

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

const char* fn_name(ElemFn f) {
    switch (f) {
    case ElemFn::Exp: return "exp";
    case ElemFn::Log: return "log";
    case ElemFn::Sin: return "sin";
    case ElemFn::Cos: return "cos";
    case ElemFn::Tan: return "tan";
    case ElemFn::Asin: return "asin";
    case ElemFn::Acos: return "acos";
    case ElemFn::Atan: return "atan";
    }
    return "?";
}

// precedence: sum 1, product 2, power 3, atom 4
int precedence(const Expr& e) {
    switch (e.kind) {
    case ExprKind::Sum: return 1;
    case ExprKind::Product: return 2;
    case ExprKind::IntPow:
    case ExprKind::RatPow: return 3;
    default: return 4;
    }
}

void print(const ExprPtr& e, std::ostringstream& os, int parent_prec) {
    int prec = precedence(*e);
    bool paren = prec < parent_prec ||
                 (e->kind == ExprKind::Constant && e->value < 0 && parent_prec > 1);
    if (paren) os << "(";
    switch (e->kind) {
    case ExprKind::Constant:
        os << fmt_double(e->value);
        break;
    case ExprKind::Var:
        os << e->name;
        break;
    case ExprKind::Deriv:
        os << e->name;
        for (int i = 0; i < e->order; ++i) os << "'";
        break;
    case ExprKind::Harmonic:
        if (e->amplitude != 1.0) os << fmt_double(e->amplitude) << "*";
        os << (e->phase == Phase::Cos ? "cos(" : "sin(");
        if (e->multiple != 1) os << e->multiple << "*";
        os << e->name << "*t)";
        break;
    case ExprKind::Sum:
        for (size_t i = 0; i < e->children.size(); ++i) {
            if (i) os << " + ";
            print(e->children[i], os, 1);
        }
        break;
    case ExprKind::Product:
        for (size_t i = 0; i < e->children.size(); ++i) {
            if (i) os << "*";
            print(e->children[i], os, 2);
        }
        break;
    case ExprKind::IntPow:
        print(e->children[0], os, 4);
        os << "^";
        if (e->ipow < 0) os << "(" << e->ipow << ")";
        else os << e->ipow;
        break;
    case ExprKind::RatPow:
        print(e->children[0], os, 4);
        os << "^(" << e->rat_q << "/" << e->rat_p << ")";
        break;
    case ExprKind::Elementary:
        os << fn_name(e->fn) << "(";
        if (e->fn == ElemFn::Log) os << fmt_double(e->log_base) << ", ";
        print(e->children[0], os, 0);
        os << ")";
        break;
    }
    if (paren) os << ")";
}

} // namespace

std::string expr_to_string(const ExprPtr& e) {
    std::ostringstream os;
    print(e, os, 0);
    return os.str();
}

double eval_expr(const ExprPtr& e, const StateFn& state, double forcing_phase) {
    switch (e->kind) {
    case ExprKind::Constant: return e->value;
    case ExprKind::Var: return state(e->name, 0);
    case ExprKind::Deriv: return state(e->name, e->order);
    case ExprKind::Harmonic: {
        double angle = e->multiple * forcing_phase;
        return e->amplitude * (e->phase == Phase::Cos ? std::cos(angle) : std::sin(angle));
    }
    case ExprKind::Sum: {
        double s = 0;
        for (auto& c : e->children) s += eval_expr(c, state, forcing_phase);
        return s;
    }
    case ExprKind::Product: {
        double p = 1;
        for (auto& c : e->children) p *= eval_expr(c, state, forcing_phase);
        return p;
    }
    case ExprKind::IntPow: {
        double b = eval_expr(e->children[0], state, forcing_phase);
        return std::pow(b, e->ipow);
    }
    case ExprKind::RatPow: {
        double b = eval_expr(e->children[0], state, forcing_phase);
        if (b >= 0) return std::pow(b, double(e->rat_q) / e->rat_p);
        if (e->rat_p % 2 == 1) {
            double root = -std::pow(-b, 1.0 / e->rat_p);
            return std::pow(root, e->rat_q);
        }
        return std::numeric_limits<double>::quiet_NaN();
    }
    case ExprKind::Elementary: {
        double a = eval_expr(e->children[0], state, forcing_phase);
        switch (e->fn) {
        case ElemFn::Exp: return std::exp(a);
        case ElemFn::Log: return std::log(a) / std::log(e->log_base);
        case ElemFn::Sin: return std::sin(a);
        case ElemFn::Cos: return std::cos(a);
        case ElemFn::Tan: return std::tan(a);
        case ElemFn::Asin: return std::asin(a);
        case ElemFn::Acos: return std::acos(a);
        case ElemFn::Atan: return std::atan(a);
        }
        return 0;
    }
    }
    return 0;
}

ExprPtr differentiate_time(const ExprPtr& e) {
    switch (e->kind) {
    case ExprKind::Constant: return make_const(0.0);
    case ExprKind::Var: return make_deriv(e->name, 1);
    case ExprKind::Deriv: return make_deriv(e->name, e->order + 1);
    case ExprKind::Harmonic:
        throw RecastError("cannot differentiate a forcing harmonic inside a recast argument");
    case ExprKind::Sum: {
        std::vector<ExprPtr> terms;
        for (auto& c : e->children) terms.push_back(differentiate_time(c));
        return make_sum(std::move(terms));
    }
    case ExprKind::Product: {
        std::vector<ExprPtr> terms;
        for (size_t i = 0; i < e->children.size(); ++i) {
            std::vector<ExprPtr> factors;
            for (size_t j = 0; j < e->children.size(); ++j)
                factors.push_back(i == j ? differentiate_time(e->children[j]) : e->children[j]);
            terms.push_back(make_product(std::move(factors)));
        }
        return make_sum(std::move(terms));
    }
    case ExprKind::IntPow: {
        auto du = differentiate_time(e->children[0]);
        return make_product({make_const(double(e->ipow)),
                             make_int_pow(e->children[0], e->ipow - 1), du});
    }
    case ExprKind::RatPow: {
        auto du = differentiate_time(e->children[0]);
        return make_product({make_const(double(e->rat_q) / e->rat_p),
                             make_rat_pow(e->children[0], e->rat_q - e->rat_p, e->rat_p), du});
    }
    case ExprKind::Elementary: {
        auto u = e->children[0];
        auto du = differentiate_time(u);
        switch (e->fn) {
        case ElemFn::Exp: return make_product({e, du});
        case ElemFn::Log:
            return make_product({make_const(1.0 / std::log(e->log_base)),
                                 make_int_pow(u, -1), du});
        case ElemFn::Sin: return make_product({make_elem(ElemFn::Cos, u), du});
        case ElemFn::Cos: return make_product({make_const(-1.0), make_elem(ElemFn::Sin, u), du});
        case ElemFn::Tan: {
            auto sec2 = make_sum({make_const(1.0), make_int_pow(e, 2)});
            return make_product({sec2, du});
        }
        case ElemFn::Asin: {
            auto inner = make_sum({make_const(1.0), negate(make_int_pow(u, 2))});
            return make_product({make_rat_pow(inner, -1, 2), du});
        }
        case ElemFn::Acos: {
            auto inner = make_sum({make_const(1.0), negate(make_int_pow(u, 2))});
            return make_product({make_const(-1.0), make_rat_pow(inner, -1, 2), du});
        }
        case ElemFn::Atan: {
            auto inner = make_sum({make_const(1.0), make_int_pow(u, 2)});
            return make_product({make_int_pow(inner, -1), du});
        }
        }
        return make_const(0.0);
    }
    }
    return make_const(0.0);
}

int OdeSystem::var_index(const std::string& v) const {
    for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i] == v) return int(i);
    return -1;
}

bool system_equal(const OdeSystem& a, const OdeSystem& b) {
    if (a.name != b.name || a.vars != b.vars || a.conservative != b.conservative)
        return false;
    if (a.forcing_symbol != b.forcing_symbol) return false;
    if (a.forcing_symbol && a.forcing_omega != b.forcing_omega) return false;
    if (a.equations.size() != b.equations.size()) return false;
    for (size_t i = 0; i < a.equations.size(); ++i)
        if (!expr_equal(a.equations[i], b.equations[i])) return false;
    if (a.constraints.size() != b.constraints.size()) return false;
    for (size_t i = 0; i < a.constraints.size(); ++i) {
        const auto& ca = a.constraints[i];
        const auto& cb = b.constraints[i];
        if (ca.var != cb.var || ca.order != cb.order || ca.value != cb.value) return false;
    }
    return true;
}

std::string system_to_string(const OdeSystem& sys) {
    std::ostringstream os;
    os.precision(17);
    os << "system " << sys.name << " {\n";
    if (!sys.vars.empty()) {
        os << "  var ";
        for (size_t i = 0; i < sys.vars.size(); ++i) {
            if (i) os << ", ";
            os << sys.vars[i];
        }
        os << ";\n";
    }
    if (sys.forcing_symbol)
        os << "  forcing " << *sys.forcing_symbol << " = " << sys.forcing_omega << ";\n";
    os << "  conservative " << (sys.conservative ? "true" : "false") << ";\n";
    for (auto& eq : sys.equations)
        os << "  eq " << expr_to_string(eq) << " = 0;\n";
    for (auto& c : sys.constraints) {
        os << "  init " << c.var;
        for (int i = 0; i < c.order; ++i) os << "'";
        os << "(0) = " << c.value << ";\n";
    }
    os << "}\n";
    return os.str();
}

} // namespace rhb
