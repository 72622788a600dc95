#include "rhb/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rhb {

int Monomial::degree() const {
    int d = 0;
    for (const auto& f : factors) d += f.exponent;
    return d;
}

void Monomial::normalize() {
    std::sort(factors.begin(), factors.end(), [](const Factor& a, const Factor& b) {
        return std::tie(a.var, a.deriv_order) < std::tie(b.var, b.deriv_order);
    });
    std::vector<Factor> merged;
    for (const auto& f : factors) {
        if (f.exponent == 0) continue;
        if (!merged.empty() && merged.back().var == f.var &&
            merged.back().deriv_order == f.deriv_order)
            merged.back().exponent += f.exponent;
        else
            merged.push_back(f);
    }
    factors = std::move(merged);
}

void PolySystem::finalize() {
    degree_ = 1;
    max_order_ = 0;
    slots_.clear();
    for (size_t v = 0; v < vars.size(); ++v) slots_.push_back({int(v), 0});
    auto add_slot = [&](int var, int order) {
        for (const auto& s : slots_)
            if (s.var == var && s.order == order) return;
        slots_.push_back({var, order});
    };
    for (const auto& eq : equations) {
        for (const auto& m : eq.monomials) {
            degree_ = std::max(degree_, m.degree());
            for (const auto& f : m.factors) {
                if (f.exponent < 1) throw RecastError("monomial exponents must be >= 1");
                add_slot(f.var, f.deriv_order);
                max_order_ = std::max(max_order_, f.deriv_order);
            }
        }
    }
    std::sort(slots_.begin(), slots_.end(), [](const Slot& a, const Slot& b) {
        return std::tie(a.var, a.order) < std::tie(b.var, b.order);
    });
}

int PolySystem::var_index(const std::string& v) const {
    for (size_t i = 0; i < vars.size(); ++i)
        if (vars[i] == v) return int(i);
    return -1;
}

int PolySystem::slot_index(int var, int order) const {
    for (size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].var == var && slots_[i].order == order) return int(i);
    return -1;
}

namespace {

double forcing_value(const std::optional<ForcingFactor>& f, double phase) {
    if (!f) return 1.0;
    double angle = f->multiple * phase;
    return f->phase == Phase::Cos ? std::cos(angle) : std::sin(angle);
}

} // namespace

Eigen::VectorXd PolySystem::eval_rhs(const Eigen::VectorXd& slot_values, double forcing_phase) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(equations.size());
    for (size_t e = 0; e < equations.size(); ++e) {
        double sum = 0;
        for (const auto& m : equations[e].monomials) {
            double v = m.coeff * forcing_value(m.forcing, forcing_phase);
            for (const auto& f : m.factors) {
                double x = slot_values[slot_index(f.var, f.deriv_order)];
                for (int k = 0; k < f.exponent; ++k) v *= x;
            }
            sum += v;
        }
        out[e] = sum;
    }
    return out;
}

Eigen::VectorXd PolySystem::eval_rhs(const StateFn& state, double forcing_phase) const {
    Eigen::VectorXd sv(slots_.size());
    for (size_t i = 0; i < slots_.size(); ++i)
        sv[i] = state(vars[slots_[i].var], slots_[i].order);
    return eval_rhs(sv, forcing_phase);
}

Eigen::MatrixXd PolySystem::eval_partials(const Eigen::VectorXd& slot_values, double forcing_phase) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(equations.size(), slots_.size());
    for (size_t e = 0; e < equations.size(); ++e) {
        for (const auto& m : equations[e].monomials) {
            double base = m.coeff * forcing_value(m.forcing, forcing_phase);
            for (size_t i = 0; i < m.factors.size(); ++i) {
                // d/d(factor i): exponent * x_i^(e_i - 1) * prod of the rest
                double v = base;
                int si = -1;
                for (size_t j = 0; j < m.factors.size(); ++j) {
                    const auto& f = m.factors[j];
                    double x = slot_values[slot_index(f.var, f.deriv_order)];
                    if (j == i) {
                        si = slot_index(f.var, f.deriv_order);
                        v *= f.exponent;
                        for (int k = 0; k < f.exponent - 1; ++k) v *= x;
                    } else {
                        for (int k = 0; k < f.exponent; ++k) v *= x;
                    }
                }
                out(e, si) += v;
            }
        }
    }
    return out;
}

PolySystem PolySystem::with_forcing_omega(double omega) const {
    PolySystem copy = *this;
    copy.forcing_omega = omega;
    return copy;
}

int degree_of(const PolySystem& sys) { return sys.degree(); }

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

} // namespace

std::string PolySystem::canonical_text() const {
    std::ostringstream os;
    for (const auto& eq : equations) {
        if (eq.kind == PolyEquation::Kind::Differential)
            os << vars[eq.lhs_var] << "' =";
        else
            os << "0 =";
        if (eq.monomials.empty()) os << " 0";
        bool first = true;
        for (const auto& m : eq.monomials) {
            double c = m.coeff;
            if (first) {
                os << " ";
                if (c < 0) { os << "-"; c = -c; }
            } else {
                os << (c < 0 ? " - " : " + ");
                c = std::abs(c);
            }
            first = false;
            bool printed = false;
            if (c != 1.0 || (m.factors.empty() && !m.forcing)) {
                os << fmt(c);
                printed = true;
            }
            for (const auto& f : m.factors) {
                if (printed) os << "*";
                os << vars[f.var];
                for (int k = 0; k < f.deriv_order; ++k) os << "'";
                if (f.exponent != 1) os << "^" << f.exponent;
                printed = true;
            }
            if (m.forcing) {
                if (printed) os << "*";
                os << (m.forcing->phase == Phase::Cos ? "cos(" : "sin(");
                if (m.forcing->multiple != 1) os << m.forcing->multiple << "*";
                os << (forcing_symbol ? *forcing_symbol : std::string("w")) << "*t)";
            }
        }
        os << "\n";
    }
    return os.str();
}

nlohmann::ordered_json PolySystem::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["variables"] = vars;
    j["degree"] = degree_;
    j["conservative"] = conservative;
    if (forcing_symbol) {
        j["forcing"] = {{"symbol", *forcing_symbol}, {"omega", forcing_omega}};
    }
    nlohmann::ordered_json eqs = nlohmann::json::array();
    for (const auto& eq : equations) {
        nlohmann::ordered_json je;
        je["kind"] = eq.kind == PolyEquation::Kind::Differential ? "differential" : "algebraic";
        if (eq.kind == PolyEquation::Kind::Differential)
            je["lhs_var"] = vars[eq.lhs_var];
        nlohmann::ordered_json ms = nlohmann::json::array();
        for (const auto& m : eq.monomials) {
            nlohmann::ordered_json jm;
            jm["coeff"] = m.coeff;
            nlohmann::ordered_json fs = nlohmann::json::array();
            for (const auto& f : m.factors)
                fs.push_back({{"var", vars[f.var]},
                              {"deriv_order", f.deriv_order},
                              {"exponent", f.exponent}});
            jm["factors"] = fs;
            if (m.forcing)
                jm["forcing"] = {{"multiple", m.forcing->multiple},
                                 {"phase", m.forcing->phase == Phase::Cos ? "cos" : "sin"}};
            ms.push_back(jm);
        }
        je["monomials"] = ms;
        eqs.push_back(je);
    }
    j["equations"] = eqs;
    nlohmann::ordered_json cs = nlohmann::json::array();
    for (const auto& c : constraints)
        cs.push_back({{"var", c.var}, {"order", c.order}, {"value", c.value}});
    j["constraints"] = cs;
    return j;
}

} // namespace rhb
