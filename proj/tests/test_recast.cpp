#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "rhb/bench.hpp"
#include "rhb/parser.hpp"
#include "rhb/recast.hpp"

using namespace rhb;

namespace {

const PolyEquation& diff_row(const PolySystem& sys, const std::string& var) {
    for (const auto& eq : sys.equations)
        if (eq.kind == PolyEquation::Kind::Differential && sys.vars[eq.lhs_var] == var)
            return eq;
    throw std::runtime_error("no differential row for " + var);
}

} // namespace

TEST_CASE("pendulum recasts to the four-variable polynomial system") {
    PolySystem sys = recast(parse_system(bench::corpus_source("pendulum")));
    CHECK(sys.vars == std::vector<std::string>{"theta", "theta__d1", "theta__sin", "theta__cos"});
    REQUIRE(sys.equations.size() == 4);
    for (const auto& eq : sys.equations) CHECK(eq.kind == PolyEquation::Kind::Differential);

    // theta' = v
    const auto& e0 = diff_row(sys, "theta");
    REQUIRE(e0.monomials.size() == 1);
    CHECK(e0.monomials[0].coeff == 1.0);
    CHECK(e0.monomials[0].factors[0].var == 1);

    // v' = -s
    const auto& e1 = diff_row(sys, "theta__d1");
    REQUIRE(e1.monomials.size() == 1);
    CHECK(e1.monomials[0].coeff == -1.0);
    CHECK(e1.monomials[0].factors[0].var == 2);

    // s' = c v ; c' = -s v
    const auto& e2 = diff_row(sys, "theta__sin");
    REQUIRE(e2.monomials.size() == 1);
    CHECK(e2.monomials[0].coeff == 1.0);
    CHECK(e2.monomials[0].factors.size() == 2);
    const auto& e3 = diff_row(sys, "theta__cos");
    REQUIRE(e3.monomials.size() == 1);
    CHECK(e3.monomials[0].coeff == -1.0);

    CHECK(degree_of(sys) == 2);

    // companion initial values, s(0) = sin theta(0) and c(0) = cos theta(0)
    std::map<std::string, double> init;
    for (const auto& c : sys.constraints) init[c.var] = c.value;
    CHECK(init.at("theta") == 1.5);
    CHECK(init.at("theta__d1") == 0.0);
    CHECK(init.at("theta__sin") == doctest::Approx(std::sin(1.5)).epsilon(1e-15));
    CHECK(init.at("theta__cos") == doctest::Approx(std::cos(1.5)).epsilon(1e-15));
}

TEST_CASE("relativistic oscillator recasts to a root companion with one algebraic row") {
    PolySystem sys = recast(parse_system(bench::corpus_source("relativistic")));
    CHECK(sys.vars == std::vector<std::string>{"x", "x__d1", "e1__rt2"});
    REQUIRE(sys.equations.size() == 3);
    CHECK(sys.equations[0].kind == PolyEquation::Kind::Differential);
    CHECK(sys.equations[1].kind == PolyEquation::Kind::Differential);
    CHECK(sys.equations[2].kind == PolyEquation::Kind::Algebraic);

    // v' = -u^3 x
    const auto& e1 = diff_row(sys, "x__d1");
    REQUIRE(e1.monomials.size() == 1);
    CHECK(e1.monomials[0].coeff == -1.0);
    CHECK(e1.monomials[0].degree() == 4);

    // u^2 + v^2 - 1 = 0
    const auto& alg = sys.equations[2];
    double sum_abs = 0;
    for (const auto& m : alg.monomials) sum_abs += std::abs(m.coeff);
    CHECK(alg.monomials.size() == 3);
    CHECK(sum_abs == 3.0);

    CHECK(degree_of(sys) == 4);

    // u(0) = sqrt(1 - beta^2)
    bool found = false;
    for (const auto& c : sys.constraints)
        if (c.var == "e1__rt2") {
            CHECK(c.value == doctest::Approx(std::sqrt(1.0 - 0.85 * 0.85)).epsilon(1e-15));
            found = true;
        }
    CHECK(found);
}

TEST_CASE("van der Pol recasts to the first-order cubic system") {
    PolySystem sys = recast(parse_system(bench::corpus_source("vdp")));
    CHECK(sys.vars == std::vector<std::string>{"x", "x__d1"});
    REQUIRE(sys.equations.size() == 2);
    CHECK(degree_of(sys) == 3);

    const auto& e1 = diff_row(sys, "x__d1");
    bool has_forcing = false, has_cubic_coupling = false;
    for (const auto& m : e1.monomials) {
        if (m.forcing) has_forcing = true;
        if (m.degree() == 3) has_cubic_coupling = true;
    }
    CHECK(has_forcing);
    CHECK(has_cubic_coupling);
}

TEST_CASE("Rayleigh-Plesset recasts through the reciprocal rule to degree 4") {
    PolySystem sys = recast(parse_system(bench::corpus_source("rayleigh_plesset")));
    CHECK(degree_of(sys) == 4);
    bool has_alg = false;
    for (const auto& eq : sys.equations)
        if (eq.kind == PolyEquation::Kind::Algebraic) has_alg = true;
    CHECK(has_alg);
    CHECK(std::count(sys.vars.begin(), sys.vars.end(), "R__inv") == 1);
}

TEST_CASE("exp introduces the derivative-relation companion row") {
    PolySystem sys = recast(parse_system("system e { var x; eq x' = exp(x); }"));
    REQUIRE(sys.vars.size() == 2);
    CHECK(sys.vars[1] == "x__exp");
    // u' = x' u: after substitution the row references the slot (x, 1)
    const auto& row = diff_row(sys, "x__exp");
    REQUIRE(row.monomials.size() == 1);
    bool has_deriv_factor = false;
    for (const auto& f : row.monomials[0].factors)
        if (f.deriv_order == 1) has_deriv_factor = true;
    CHECK(has_deriv_factor);
}

TEST_CASE("nested elementary functions recast inside-out") {
    PolySystem sys = recast(parse_system("system n { var x; eq x' = sin(exp(x)); }"));
    // companions: x__exp, then sin/cos of it
    CHECK(std::count(sys.vars.begin(), sys.vars.end(), "x__exp") == 1);
    CHECK(std::count(sys.vars.begin(), sys.vars.end(), "x__exp__sin") == 1);
    CHECK(std::count(sys.vars.begin(), sys.vars.end(), "x__exp__cos") == 1);
    CHECK(sys.equations.size() == sys.vars.size());
}

TEST_CASE("inverse trig rules carry the three-equation auxiliary blocks") {
    PolySystem sys = recast(parse_system("system a { var x; eq x' = atan(x); }"));
    // u, v = 1 + x^2, w = 1/v
    int alg = 0;
    for (const auto& eq : sys.equations)
        if (eq.kind == PolyEquation::Kind::Algebraic) ++alg;
    CHECK(alg == 2);
    CHECK(sys.vars.size() == 4);

    PolySystem asys = recast(parse_system("system b { var x; eq x' = asin(x)*acos(x); }"));
    // asin: u + root + inv, acos: u + shared root + its negated reciprocal
    CHECK(asys.equations.size() == asys.vars.size());
    int alg2 = 0;
    for (const auto& eq : asys.equations)
        if (eq.kind == PolyEquation::Kind::Algebraic) ++alg2;
    CHECK(alg2 == 3); // root row shared, two reciprocal rows
}

TEST_CASE("asymmetric pendulum keeps acceleration factors in algebraic rows") {
    PolySystem sys = recast(parse_system(bench::corpus_source("asym_pendulum")));
    CHECK(sys.vars == std::vector<std::string>{"x", "y", "x__d1", "y__d1"});
    CHECK(degree_of(sys) == 3);
    int diff = 0, alg = 0;
    for (const auto& eq : sys.equations)
        eq.kind == PolyEquation::Kind::Differential ? ++diff : ++alg;
    CHECK(diff == 2);
    CHECK(alg == 2);
    CHECK(sys.max_deriv_order() == 1);
}

TEST_CASE("variable accounting: companions added equals equations added") {
    for (const auto& name : bench::corpus_names()) {
        OdeSystem ode = parse_system(bench::corpus_source(name));
        PolySystem poly = recast(ode);
        CHECK(poly.equations.size() == poly.vars.size());
        CHECK(poly.vars.size() == ode.vars.size() + poly.companions.size());
    }
}

TEST_CASE("recasting a polynomial system is the identity") {
    PolySystem sys = recast(parse_system(bench::corpus_source("duffing")));
    PolySystem twice = recast(sys);
    CHECK(twice.canonical_text() == sys.canonical_text());
}

TEST_CASE("golden canonical forms of the paper systems") {
    CHECK(recast(parse_system(bench::corpus_source("pendulum"))).canonical_text() ==
          "theta' = theta__d1\n"
          "theta__d1' = -theta__sin\n"
          "theta__sin' = theta__d1*theta__cos\n"
          "theta__cos' = -theta__d1*theta__sin\n");
    CHECK(recast(parse_system(bench::corpus_source("relativistic"))).canonical_text() ==
          "x' = x__d1\n"
          "x__d1' = -x*e1__rt2^3\n"
          "0 = -1 + x__d1^2 + e1__rt2^2\n");
    CHECK(recast(parse_system(bench::corpus_source("vdp"))).canonical_text() ==
          "x' = x__d1\n"
          "x__d1' = 0.5*cos(w*t) - x - 0.1*x^2*x__d1 + 0.1*x__d1\n");
}

TEST_CASE("round-trip consistency: companion substitution zeroes the recast residuals") {
    std::mt19937_64 rng(2718281828ULL);
    std::uniform_real_distribution<double> uni(-0.8, 0.8);

    for (const auto& name : {"pendulum", "relativistic", "asym_pendulum", "vdp"}) {
        OdeSystem ode = parse_system(bench::corpus_source(name));
        PolySystem poly = recast(ode);

        for (int trial = 0; trial < 100; ++trial) {
            // lazily sampled random state over (original var, derivative order)
            std::map<std::pair<std::string, int>, double> state;
            std::function<double(const std::string&, int)> get =
                [&](const std::string& var, int order) -> double {
                auto key = std::make_pair(var, order);
                auto it = state.find(key);
                if (it != state.end()) return it->second;
                double v = uni(rng);
                state[key] = v;
                return v;
            };

            // zero the original residuals jointly: they are affine in the
            // per-variable top derivatives
            std::map<std::string, int> top;
            for (const auto& eq : ode.equations) {
                std::function<void(const ExprPtr&)> scan = [&](const ExprPtr& e) {
                    if (e->kind == ExprKind::Deriv)
                        top[e->name] = std::max(top[e->name], e->order);
                    for (const auto& c : e->children) scan(c);
                };
                scan(eq);
            }
            std::vector<std::string> top_vars;
            for (const auto& [v, k] : top) top_vars.push_back(v);
            const int nt = int(top_vars.size());
            double psi = ode.forcing_symbol ? 0.37 : 0.0;
            auto residuals = [&](const Eigen::VectorXd& a) {
                for (int v = 0; v < nt; ++v) state[{top_vars[v], top[top_vars[v]]}] = a[v];
                Eigen::VectorXd r(ode.equations.size());
                for (size_t e = 0; e < ode.equations.size(); ++e)
                    r[e] = eval_expr(ode.equations[e], get, psi);
                return r;
            };
            Eigen::VectorXd r0 = residuals(Eigen::VectorXd::Zero(nt));
            Eigen::MatrixXd mass(nt, nt);
            for (int v = 0; v < nt; ++v) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(nt);
                e[v] = 1.0;
                mass.col(v) = residuals(e) - r0;
            }
            Eigen::VectorXd tops = mass.fullPivLu().solve(-r0);
            residuals(tops); // pin the solved values into the state

            // companion values (and their time derivatives) from the definitions
            std::map<std::pair<std::string, int>, double> full = state;
            std::function<double(const std::string&, int)> get_full =
                [&](const std::string& var, int order) -> double {
                auto it = full.find({var, order});
                if (it != full.end()) return it->second;
                return get(var, order);
            };
            for (const auto& comp : poly.companions) {
                full[{comp.name, 0}] = eval_expr(comp.definition, get_full);
                full[{comp.name, 1}] =
                    eval_expr(differentiate_time(comp.definition), get_full);
            }

            Eigen::VectorXd vals = poly.eval_rhs(get_full, psi);
            for (size_t e = 0; e < poly.equations.size(); ++e) {
                double resid;
                if (poly.equations[e].kind == PolyEquation::Kind::Differential) {
                    int lv = poly.equations[e].lhs_var;
                    resid = get_full(poly.vars[lv], 1) - vals[e];
                } else {
                    resid = vals[e];
                }
                CHECK(std::abs(resid) <= 1e-13 * 100);
            }
        }
    }
}

TEST_CASE("unsupported constructs are reported") {
    // sin of a forcing harmonic has no recast rule
    CHECK_THROWS_AS(
        recast(parse_system(
            "system u { var x; forcing w = 1.0; eq x' + exp(cos(w*t)) = 0; }")),
        RecastError);
}
