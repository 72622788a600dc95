#include <map>
#include <stdexcept>

#include "rhb/bench.hpp"

namespace rhb::bench {

namespace {

// Duffing parameters for the bifurcation studies: damping 0.1, unit linear
// and cubic stiffness, F = 1.5 at omega = 2 gives three coexisting
// solutions (checked by the oracle in the test suite).
const char* kDuffing = R"(system duffing {
  var x;
  forcing w = 2.0;
  eq x'' + 0.1*x' + x + x^3 = 1.5*cos(w*t);
}
)";

const char* kVdp = R"(system vdp {
  var x;
  forcing w = 1.1;
  eq x'' - 0.1*(1 - x^2)*x' + x = 0.5*cos(w*t);
}
)";

// Written with both sides already divided by R, so the reciprocal rule
// applies directly. The static terms balance at R = 1.
const char* kRayleighPlesset = R"(system rayleigh_plesset {
  var R;
  forcing w = 1.5;
  eq R'' = -(3/2)*R'^2/R - 0.3*R'/R^2 - 1.0/R^2 + 0.6/R^4 + 0.4/R - (0.2/R)*cos(w*t);
}
)";

const char* kRelativistic = R"(system relativistic {
  var x;
  conservative true;
  eq x'' + (1 - x'^2)^(3/2)*x = 0;
  init x(0) = 0;
  init x'(0) = 0.85;
}
)";

const char* kPendulum = R"(system pendulum {
  var theta;
  conservative true;
  eq theta'' + sin(theta) = 0;
  init theta(0) = 1.5;
  init theta'(0) = 0;
}
)";

// kappa = 0.01
const char* kAsymPendulum = R"(system asym_pendulum {
  var x, y;
  eq x'' + 0.99*x + 0.99*(x*x'^2 + x*y'^2 + x*y*y'' + x^2*x'') = 0;
  eq y'' + y + (y*y'^2 + y*x'^2 + x*y*x'' + y^2*y'') = 0;
  init x(0) = 0.1;
  init y(0) = 0.2;
  init x'(0) = 0;
  init y'(0) = 0;
}
)";

const std::map<std::string, const char*>& sources() {
    static const std::map<std::string, const char*> m = {
        {"duffing", kDuffing},
        {"vdp", kVdp},
        {"rayleigh_plesset", kRayleighPlesset},
        {"relativistic", kRelativistic},
        {"pendulum", kPendulum},
        {"asym_pendulum", kAsymPendulum},
    };
    return m;
}

std::vector<PointConstraint> constraints_by_vars(const PolySystem& sys,
                                                 const std::vector<std::string>& names) {
    std::vector<PointConstraint> out;
    for (const auto& n : names) {
        bool found = false;
        for (const auto& c : sys.constraints)
            if (c.var == n && c.order == 0) {
                out.push_back(c);
                found = true;
                break;
            }
        if (!found)
            throw std::invalid_argument("no stored constraint for variable '" + n + "'");
    }
    return out;
}

} // namespace

std::vector<std::string> corpus_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : sources()) out.push_back(k);
    return out;
}

std::string corpus_source(const std::string& name) {
    auto it = sources().find(name);
    if (it == sources().end())
        throw std::invalid_argument("unknown builtin system '" + name + "'");
    return it->second;
}

BalanceScheme scheme_for(const PolySystem& sys, const std::string& case_name, int scheme_no) {
    if (case_name == "pendulum") {
        if (scheme_no == 0) scheme_no = 3;
        BalanceScheme s;
        s.ranges.assign(sys.equations.size(), {0, -1});
        if (scheme_no == 1) {
            s.constraints = constraints_by_vars(sys, {"theta"});
            return s;
        }
        // schemes 2/3 balance the companion rows from the first harmonic on
        for (size_t e = 0; e < sys.equations.size(); ++e) {
            if (sys.equations[e].kind == PolyEquation::Kind::Differential &&
                (sys.vars[sys.equations[e].lhs_var] == "theta__sin" ||
                 sys.vars[sys.equations[e].lhs_var] == "theta__cos"))
                s.ranges[e] = {1, -1};
        }
        if (scheme_no == 2)
            s.constraints = constraints_by_vars(sys, {"theta", "theta__sin", "theta__cos"});
        else if (scheme_no == 3)
            s.constraints = constraints_by_vars(sys, {"theta__d1", "theta__sin", "theta__cos"});
        else
            throw std::invalid_argument("pendulum schemes are 1..3");
        return s;
    }
    if (case_name == "relativistic" && scheme_no == 0) scheme_no = 3;
    if (scheme_no != 0) {
        // conservative constraint variants: initial displacement, initial
        // velocity, or both
        if (!sys.conservative)
            throw std::invalid_argument("case '" + case_name + "' has a single scheme");
        const std::string v0 = sys.vars.at(0);
        BalanceScheme s;
        s.ranges.assign(sys.equations.size(), {0, -1});
        switch (scheme_no) {
        case 1: s.constraints = constraints_by_vars(sys, {v0}); break;
        case 2: s.constraints = constraints_by_vars(sys, {v0 + "__d1"}); break;
        case 3: s.constraints = constraints_by_vars(sys, {v0, v0 + "__d1"}); break;
        default: throw std::invalid_argument("schemes are 1..3");
        }
        return s;
    }
    return BalanceScheme::full(sys, !sys.constraints.empty());
}

CaseSpec builtin_case(const std::string& name) {
    CaseSpec spec;
    spec.name = name;
    spec.source = corpus_source(name);

    if (name == "pendulum") {
        spec.order = 25;
        spec.scheme = 3;
        spec.omega0 = 1.0; // small-angle estimate
        spec.seeds = {{"theta", 1, 0, false, 1.423},
                      {"theta__sin", 1, 0, false, 1.065},
                      {"theta__cos", 0, 0, false, 1.028}};
        spec.max_mean_error = 1e-10;
        spec.max_wall_seconds = 5.0;
    } else if (name == "relativistic") {
        spec.order = 55;
        spec.scheme = 3;
        spec.omega0 = 0.8;
        spec.seeds = {{"x", 1, 0, true, 1.0}, {"e1__rt2", 0, 0, false, 0.7}};
        spec.max_amplitude_error = 1e-10;
        spec.max_wall_seconds = 10.0;
    } else if (name == "asym_pendulum") {
        spec.trunc = 5;
        spec.omega1 = 0.9857;
        spec.omega2 = 0.9935;
        // the residual floor of this case sits near 3e-5: the base
        // frequencies are known to four digits only and the lattice is
        // truncated at p = 5
        spec.solver.tol_residual = 1e-4;
        spec.warmup_odd_lattice = true;
        spec.oracle_step_divisor = 4096.0;
        spec.oracle_on_recast = true;
        spec.seeds = {{"x", 1, 0, false, 0.1},
                      {"y", 0, 1, false, 0.2},
                      {"x__d1", 1, 0, true, -0.1 * 0.9857},
                      {"y__d1", 0, 1, true, -0.2 * 0.9935}};
        spec.max_amplitude_error = 2e-2;
        spec.max_wall_seconds = 60.0;
    } else if (name == "duffing") {
        spec.order = 9;
    } else if (name == "vdp") {
        spec.order = 9;
    } else if (name == "rayleigh_plesset") {
        spec.order = 9;
        // oscillation around the static radius
        spec.seeds = {{"R", 0, 0, false, 1.0}, {"R__inv", 0, 0, false, 1.0}};
    } else {
        throw std::invalid_argument("unknown builtin case '" + name + "'");
    }
    return spec;
}

} // namespace rhb::bench
