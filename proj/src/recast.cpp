#include "rhb/recast.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace rhb {

namespace {

// ---------------------------------------------------------------------------
// Monomial expansion of a polynomial expression tree.

using NameIndex = std::map<std::string, int>;

std::vector<Monomial> expand(const ExprPtr& e, const NameIndex& idx);

std::vector<Monomial> expand_product(const std::vector<Monomial>& a,
                                     const std::vector<Monomial>& b) {
    std::vector<Monomial> out;
    out.reserve(a.size() * b.size());
    for (const auto& ma : a)
        for (const auto& mb : b) {
            Monomial m;
            m.coeff = ma.coeff * mb.coeff;
            m.factors = ma.factors;
            m.factors.insert(m.factors.end(), mb.factors.begin(), mb.factors.end());
            if (ma.forcing && mb.forcing)
                throw RecastError("products of forcing harmonics are not supported");
            m.forcing = ma.forcing ? ma.forcing : mb.forcing;
            m.normalize();
            out.push_back(std::move(m));
        }
    return out;
}

std::vector<Monomial> expand(const ExprPtr& e, const NameIndex& idx) {
    switch (e->kind) {
    case ExprKind::Constant:
        return {Monomial{e->value, {}, std::nullopt}};
    case ExprKind::Var: {
        auto it = idx.find(e->name);
        if (it == idx.end()) throw RecastError("unknown variable '" + e->name + "'");
        return {Monomial{1.0, {Factor{it->second, 0, 1}}, std::nullopt}};
    }
    case ExprKind::Deriv: {
        auto it = idx.find(e->name);
        if (it == idx.end()) throw RecastError("unknown variable '" + e->name + "'");
        return {Monomial{1.0, {Factor{it->second, e->order, 1}}, std::nullopt}};
    }
    case ExprKind::Harmonic:
        return {Monomial{e->amplitude, {}, ForcingFactor{e->multiple, e->phase}}};
    case ExprKind::Sum: {
        std::vector<Monomial> out;
        for (const auto& c : e->children) {
            auto part = expand(c, idx);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    case ExprKind::Product: {
        std::vector<Monomial> out = {Monomial{1.0, {}, std::nullopt}};
        for (const auto& c : e->children) out = expand_product(out, expand(c, idx));
        return out;
    }
    case ExprKind::IntPow: {
        if (e->ipow < 0)
            throw RecastError("internal: negative power survived the rewrite pass");
        std::vector<Monomial> out = {Monomial{1.0, {}, std::nullopt}};
        auto base = expand(e->children[0], idx);
        for (int k = 0; k < e->ipow; ++k) out = expand_product(out, base);
        return out;
    }
    default:
        throw RecastError("internal: non-polynomial node survived the rewrite pass");
    }
}

bool factor_list_less(const std::vector<Factor>& a, const std::vector<Factor>& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        auto ta = std::tie(a[i].var, a[i].deriv_order, a[i].exponent);
        auto tb = std::tie(b[i].var, b[i].deriv_order, b[i].exponent);
        if (ta != tb) return ta < tb;
    }
    return a.size() < b.size();
}

int forcing_rank(const std::optional<ForcingFactor>& f) {
    if (!f) return 0;
    return (f->phase == Phase::Cos ? 1 : 2) * 1000 + f->multiple;
}

bool same_shape(const Monomial& a, const Monomial& b) {
    if (a.factors.size() != b.factors.size()) return false;
    for (size_t i = 0; i < a.factors.size(); ++i) {
        if (a.factors[i].var != b.factors[i].var ||
            a.factors[i].deriv_order != b.factors[i].deriv_order ||
            a.factors[i].exponent != b.factors[i].exponent)
            return false;
    }
    return forcing_rank(a.forcing) == forcing_rank(b.forcing);
}

// Canonical form: factor-sorted monomials, like terms merged, deterministic
// monomial order so system equality is decidable.
std::vector<Monomial> canonicalize(std::vector<Monomial> ms) {
    std::sort(ms.begin(), ms.end(), [](const Monomial& a, const Monomial& b) {
        if (!factor_list_less(a.factors, b.factors) && !factor_list_less(b.factors, a.factors))
            return forcing_rank(a.forcing) < forcing_rank(b.forcing);
        return factor_list_less(a.factors, b.factors);
    });
    std::vector<Monomial> out;
    for (auto& m : ms) {
        if (!out.empty() && same_shape(out.back(), m))
            out.back().coeff += m.coeff;
        else
            out.push_back(std::move(m));
    }
    std::erase_if(out, [](const Monomial& m) { return m.coeff == 0.0; });
    return out;
}

// ---------------------------------------------------------------------------
// The rewrite pass.

class Recaster {
public:
    explicit Recaster(const OdeSystem& sys) : src_(sys) {}

    PolySystem run() {
        build_chains();

        std::vector<ExprPtr> originals;
        for (const auto& eq : src_.equations)
            originals.push_back(rewrite(normalize_derivs(eq)));

        PolySystem out;
        out.name = src_.name;
        out.forcing_symbol = src_.forcing_symbol;
        out.forcing_omega = src_.forcing_omega;
        out.conservative = src_.conservative;
        out.vars = vars_;
        out.companions = companions_;

        NameIndex idx;
        for (size_t i = 0; i < vars_.size(); ++i) idx[vars_[i]] = int(i);

        std::vector<bool> has_diff(vars_.size(), false);
        // variables owned by pending companion rows may not be claimed by
        // the classification of the original equations
        for (const auto& [lhs, rhs] : diff_rows_) has_diff[idx.at(lhs)] = true;

        // chain rows first, then the transformed originals, then companion rows
        for (const auto& [lhs, rhs] : chain_rows_) {
            PolyEquation eq;
            eq.kind = PolyEquation::Kind::Differential;
            eq.lhs_var = idx.at(lhs);
            eq.monomials = canonicalize(expand(rhs, idx));
            has_diff[eq.lhs_var] = true;
            out.equations.push_back(std::move(eq));
        }
        for (const auto& tree : originals)
            out.equations.push_back(classify(canonicalize(expand(tree, idx)), has_diff));
        for (const auto& [lhs, rhs] : diff_rows_) {
            PolyEquation eq;
            eq.kind = PolyEquation::Kind::Differential;
            eq.lhs_var = idx.at(lhs);
            eq.monomials = canonicalize(expand(rhs, idx));
            out.equations.push_back(std::move(eq));
        }
        for (const auto& tree : alg_rows_) {
            PolyEquation eq;
            eq.kind = PolyEquation::Kind::Algebraic;
            eq.monomials = canonicalize(expand(tree, idx));
            out.equations.push_back(std::move(eq));
        }

        if (out.equations.size() != out.vars.size())
            throw RecastError("recast produced a non-square system");

        map_constraints(out);
        out.finalize();
        return out;
    }

private:
    // --- order reduction -----------------------------------------------------

    void build_chains() {
        vars_ = src_.vars;
        std::map<std::string, int> max_order;
        std::function<void(const ExprPtr&)> scan = [&](const ExprPtr& e) {
            if (e->kind == ExprKind::Deriv) {
                auto& mo = max_order[e->name];
                mo = std::max(mo, e->order);
            }
            for (const auto& c : e->children) scan(c);
        };
        for (const auto& eq : src_.equations) scan(eq);

        for (const auto& v : src_.vars) {
            int k = max_order.count(v) ? max_order[v] : 0;
            if (k < 2) continue;
            chain_len_[v] = k - 1;
            std::string prev = v;
            for (int j = 1; j <= k - 1; ++j) {
                std::string cname = v + "__d" + std::to_string(j);
                vars_.push_back(cname);
                defs_[cname] = make_deriv(v, j);
                companions_.push_back({cname, defs_[cname]});
                chain_rows_.emplace_back(prev, make_var(cname));
                prev = cname;
            }
        }
    }

    // Rewrites Deriv(x, j) against the chain of x.
    ExprPtr normalize_derivs(const ExprPtr& e) {
        if (e->kind == ExprKind::Deriv) {
            auto it = chain_len_.find(e->name);
            if (it == chain_len_.end()) return e;
            int len = it->second;
            if (e->order <= len)
                return make_var(e->name + "__d" + std::to_string(e->order));
            return make_deriv(e->name + "__d" + std::to_string(len), e->order - len);
        }
        if (e->children.empty()) return e;
        auto copy = std::make_shared<Expr>(*e);
        for (auto& c : copy->children) c = normalize_derivs(c);
        return copy;
    }

    // --- companion machinery -------------------------------------------------

    // Definition of `tree` with all companion references substituted away, so
    // every recorded definition is in terms of the pre-recast variables.
    ExprPtr to_original(const ExprPtr& tree) {
        switch (tree->kind) {
        case ExprKind::Var: {
            auto it = defs_.find(tree->name);
            return it == defs_.end() ? tree : it->second;
        }
        case ExprKind::Deriv: {
            auto it = defs_.find(tree->name);
            if (it == defs_.end()) return tree;
            ExprPtr d = it->second;
            for (int k = 0; k < tree->order; ++k) d = differentiate_time(d);
            return to_original(d);
        }
        default: {
            if (tree->children.empty()) return tree;
            auto copy = std::make_shared<Expr>(*tree);
            for (auto& c : copy->children) c = to_original(c);
            return copy;
        }
        }
    }

    std::string key_of(const ExprPtr& g) { return expr_to_string(g); }

    // Base name used in companion suffix schemes: the variable itself, or a
    // deterministic synthetic name for compound arguments.
    std::string base_name(const ExprPtr& g) {
        if (g->kind == ExprKind::Var) return g->name;
        std::string key = "base:" + key_of(g);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        std::string name = "e" + std::to_string(++synth_counter_);
        cache_[key] = name;
        return name;
    }

    std::string add_companion(const std::string& name, const ExprPtr& defn_in_output_vars) {
        vars_.push_back(name);
        defs_[name] = to_original(defn_in_output_vars);
        companions_.push_back({name, defs_[name]});
        return name;
    }

    ExprPtr time_derivative(const ExprPtr& g) {
        return normalize_derivs(differentiate_time(g));
    }

    // 1/g companion: row g*w - 1 = 0.
    ExprPtr inv_companion(const ExprPtr& g) {
        std::string key = "inv:" + key_of(g);
        if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
        std::string name = base_name(g) + "__inv";
        add_companion(name, make_int_pow(g, -1));
        cache_[key] = name;
        alg_rows_.push_back(make_sum({make_product({g, make_var(name)}), make_const(-1.0)}));
        return make_var(name);
    }

    // -1/g companion: row g*w + 1 = 0 (arccos auxiliary).
    ExprPtr neg_inv_companion(const ExprPtr& g) {
        std::string key = "ninv:" + key_of(g);
        if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
        std::string name = base_name(g) + "__ninv";
        add_companion(name, negate(make_int_pow(g, -1)));
        cache_[key] = name;
        alg_rows_.push_back(make_sum({make_product({g, make_var(name)}), make_const(1.0)}));
        return make_var(name);
    }

    // g^(1/p) companion: row beta^p - g = 0.
    ExprPtr root_companion(const ExprPtr& g, int p) {
        std::string key = "rt" + std::to_string(p) + ":" + key_of(g);
        if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
        std::string name = base_name(g) + "__rt" + std::to_string(p);
        add_companion(name, make_rat_pow(g, 1, p));
        cache_[key] = name;
        alg_rows_.push_back(make_sum({make_int_pow(make_var(name), p), negate(g)}));
        return make_var(name);
    }

    // Reciprocal of an already-polynomial expression, splitting products so a
    // power of a variable costs a single companion.
    ExprPtr reciprocal(const ExprPtr& g) {
        switch (g->kind) {
        case ExprKind::Constant:
            if (g->value == 0.0) throw RecastError("reciprocal of the zero constant");
            return make_const(1.0 / g->value);
        case ExprKind::Product: {
            std::vector<ExprPtr> parts;
            for (const auto& c : g->children) parts.push_back(reciprocal(c));
            return make_product(std::move(parts));
        }
        case ExprKind::IntPow:
            if (g->ipow >= 1) return make_int_pow(reciprocal(g->children[0]), g->ipow);
            return make_int_pow(g->children[0], -g->ipow);
        default:
            return inv_companion(g);
        }
    }

    // Inside-out rewrite to a polynomial tree.
    ExprPtr rewrite(const ExprPtr& e) {
        switch (e->kind) {
        case ExprKind::Constant:
        case ExprKind::Var:
        case ExprKind::Deriv:
        case ExprKind::Harmonic:
            return e;
        case ExprKind::Sum: {
            std::vector<ExprPtr> ch;
            for (const auto& c : e->children) ch.push_back(rewrite(c));
            return make_sum(std::move(ch));
        }
        case ExprKind::Product: {
            std::vector<ExprPtr> ch;
            for (const auto& c : e->children) ch.push_back(rewrite(c));
            return make_product(std::move(ch));
        }
        case ExprKind::IntPow: {
            ExprPtr base = rewrite(e->children[0]);
            if (e->ipow >= 0) return make_int_pow(base, e->ipow);
            return make_int_pow(reciprocal(base), -e->ipow);
        }
        case ExprKind::RatPow: {
            ExprPtr base = rewrite(e->children[0]);
            ExprPtr beta = root_companion(base, e->rat_p);
            if (e->rat_q >= 0) return make_int_pow(beta, e->rat_q);
            return make_int_pow(inv_companion(beta), -e->rat_q);
        }
        case ExprKind::Elementary:
            return rewrite_elementary(e);
        }
        throw RecastError("unsupported construct");
    }

    ExprPtr rewrite_elementary(const ExprPtr& e) {
        ExprPtr g = rewrite(e->children[0]);
        ExprPtr gdot = time_derivative(g);
        std::string base = base_name(g);

        switch (e->fn) {
        case ElemFn::Exp: {
            std::string key = "exp:" + key_of(g);
            if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
            std::string u = add_companion(base + "__exp", make_elem(ElemFn::Exp, g));
            cache_[key] = u;
            diff_rows_.emplace_back(u, make_product({gdot, make_var(u)}));
            return make_var(u);
        }
        case ElemFn::Log: {
            std::ostringstream suffix;
            suffix << "log" << e->log_base;
            std::string key = suffix.str() + ":" + key_of(g);
            if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
            ExprPtr v = inv_companion(g);
            std::string u = add_companion(base + "__" + suffix.str(),
                                          make_elem(ElemFn::Log, g, e->log_base));
            cache_[key] = u;
            diff_rows_.emplace_back(
                u, make_product({make_const(1.0 / std::log(e->log_base)), v, gdot}));
            return make_var(u);
        }
        case ElemFn::Sin:
        case ElemFn::Cos: {
            std::string key = "sincos:" + key_of(g);
            std::string s_name, c_name;
            if (auto it = cache_.find(key); it != cache_.end()) {
                s_name = it->second;
                c_name = cache_.at("cos-of:" + key);
            } else {
                s_name = add_companion(base + "__sin", make_elem(ElemFn::Sin, g));
                c_name = add_companion(base + "__cos", make_elem(ElemFn::Cos, g));
                cache_[key] = s_name;
                cache_["cos-of:" + key] = c_name;
                diff_rows_.emplace_back(s_name, make_product({make_var(c_name), gdot}));
                diff_rows_.emplace_back(
                    c_name, make_product({make_const(-1.0), make_var(s_name), gdot}));
            }
            return make_var(e->fn == ElemFn::Sin ? s_name : c_name);
        }
        case ElemFn::Tan: {
            std::string key = "tan:" + key_of(g);
            if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
            std::string u = add_companion(base + "__tan", make_elem(ElemFn::Tan, g));
            cache_[key] = u;
            diff_rows_.emplace_back(
                u, make_sum({gdot, make_product({gdot, make_int_pow(make_var(u), 2)})}));
            return make_var(u);
        }
        case ElemFn::Asin:
        case ElemFn::Acos: {
            const bool is_asin = e->fn == ElemFn::Asin;
            std::string key = (is_asin ? "asin:" : "acos:") + key_of(g);
            if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
            // v = sqrt(1 - g^2), w = +-1/v, u' = g'. w
            ExprPtr one_minus = make_sum({make_const(1.0), negate(make_int_pow(g, 2))});
            ExprPtr v = root_companion(one_minus, 2);
            ExprPtr w = is_asin ? inv_companion(v) : neg_inv_companion(v);
            std::string u = add_companion(base + (is_asin ? "__asin" : "__acos"),
                                          make_elem(e->fn, g));
            cache_[key] = u;
            diff_rows_.emplace_back(u, make_product({gdot, w}));
            return make_var(u);
        }
        case ElemFn::Atan: {
            std::string key = "atan:" + key_of(g);
            if (auto it = cache_.find(key); it != cache_.end()) return make_var(it->second);
            // v = 1 + g^2 (linear algebraic alias), w = 1/v, u' = g'. w
            ExprPtr vdef = make_sum({make_const(1.0), make_int_pow(g, 2)});
            std::string v_name = add_companion(base + "__atan_v", vdef);
            alg_rows_.push_back(make_sum({make_var(v_name), negate(vdef)}));
            ExprPtr w = inv_companion(make_var(v_name));
            std::string u = add_companion(base + "__atan", make_elem(ElemFn::Atan, g));
            cache_[key] = u;
            diff_rows_.emplace_back(u, make_product({gdot, w}));
            return make_var(u);
        }
        default:
            throw RecastError("unsupported construct");
        }
    }

    // --- constraints ----------------------------------------------------------

    void map_constraints(PolySystem& out) {
        std::map<std::pair<std::string, int>, bool> seen;
        for (const auto& c : src_.constraints) {
            PointConstraint mapped = c;
            auto it = chain_len_.find(c.var);
            if (it != chain_len_.end() && c.order >= 1) {
                int len = it->second;
                if (c.order <= len) {
                    mapped.var = c.var + "__d" + std::to_string(c.order);
                    mapped.order = 0;
                } else {
                    mapped.var = c.var + "__d" + std::to_string(len);
                    mapped.order = c.order - len;
                }
            }
            out.constraints.push_back(mapped);
            seen[{mapped.var, mapped.order}] = true;
        }

        // consistent companion initial values, e.g. s(0) = sin(theta(0))
        StateFn at_zero = [&](const std::string& var, int order) -> double {
            for (const auto& c : src_.constraints)
                if (c.var == var && c.order == order) return c.value;
            throw RecastError("missing");
        };
        for (const auto& comp : companions_) {
            if (seen.count({comp.name, 0})) continue;
            try {
                double v0 = eval_expr(comp.definition, at_zero);
                if (std::isfinite(v0)) {
                    out.constraints.push_back({comp.name, 0, v0});
                    seen[{comp.name, 0}] = true;
                }
            } catch (const RecastError&) {
                // not derivable from the given constraints; leave unset
            }
        }
    }

    PolyEquation classify(std::vector<Monomial> ms, std::vector<bool>& has_diff) {
        for (size_t i = 0; i < ms.size(); ++i) {
            const auto& m = ms[i];
            if (m.forcing || m.factors.size() != 1) continue;
            const auto& f = m.factors[0];
            if (f.deriv_order != 1 || f.exponent != 1) continue;
            if (has_diff[f.var]) continue;
            bool elsewhere = false;
            for (size_t j = 0; j < ms.size() && !elsewhere; ++j) {
                if (j == i) continue;
                for (const auto& g : ms[j].factors)
                    if (g.var == f.var && g.deriv_order >= 1) { elsewhere = true; break; }
            }
            if (elsewhere) continue;

            PolyEquation eq;
            eq.kind = PolyEquation::Kind::Differential;
            eq.lhs_var = f.var;
            double c = m.coeff;
            for (size_t j = 0; j < ms.size(); ++j) {
                if (j == i) continue;
                Monomial rhs = ms[j];
                rhs.coeff /= -c;
                eq.monomials.push_back(std::move(rhs));
            }
            has_diff[f.var] = true;
            return eq;
        }
        PolyEquation eq;
        eq.kind = PolyEquation::Kind::Algebraic;
        eq.monomials = std::move(ms);
        return eq;
    }

    const OdeSystem& src_;
    std::vector<std::string> vars_;
    std::vector<CompanionDef> companions_;
    std::map<std::string, int> chain_len_;
    std::vector<std::pair<std::string, ExprPtr>> chain_rows_;
    std::vector<std::pair<std::string, ExprPtr>> diff_rows_;
    std::vector<ExprPtr> alg_rows_;
    std::map<std::string, ExprPtr> defs_;
    std::map<std::string, std::string> cache_;
    int synth_counter_ = 0;
};

} // namespace

PolySystem recast(const OdeSystem& sys) {
    Recaster r(sys);
    return r.run();
}

PolySystem recast(const PolySystem& sys) { return sys; }

} // namespace rhb
