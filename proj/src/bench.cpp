#include "rhb/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rhb/parser.hpp"

namespace rhb::bench {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

int seed_coeff_index(const HarmonicBasis& basis, const CaseSpec::Seed& seed) {
    if (basis.mode == HarmonicBasis::Mode::Single) {
        if (seed.m == 0) return 0;
        return seed.sine ? 2 * seed.m : 2 * seed.m - 1;
    }
    if (seed.m == 0 && seed.n == 0) return 0;
    for (size_t k = 0; k < basis.lattice.size(); ++k)
        if (basis.lattice[k].first == seed.m && basis.lattice[k].second == seed.n)
            return seed.sine ? 2 * int(k) + 2 : 2 * int(k) + 1;
    throw std::invalid_argument("seed harmonic (" + std::to_string(seed.m) + "," +
                                std::to_string(seed.n) + ") is not in the lattice");
}

SeriesSolution make_series(const AlgebraicProblem& prob, const SolveReport& rep) {
    SeriesSolution s;
    s.basis = prob.basis;
    s.layout = prob.layout;
    s.coeffs = rep.solution.data;
    if (prob.basis.mode == HarmonicBasis::Mode::Single) s.omega = rep.omega;
    return s;
}

// copy dual-mode coefficients between lattices, matching entries by (m, n)
Eigen::VectorXd remap_dual(const HarmonicBasis& from, const SpectrumLayout& from_lay,
                           const Eigen::VectorXd& v, const HarmonicBasis& to,
                           const SpectrumLayout& to_lay) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(to_lay.size());
    std::map<std::pair<int, int>, int> src;
    for (size_t k = 0; k < from.lattice.size(); ++k) src[from.lattice[k]] = int(k);
    for (int var = 0; var < to_lay.n_vars; ++var) {
        out[to_lay.at(var, 0)] = v[from_lay.at(var, 0)];
        for (size_t k = 0; k < to.lattice.size(); ++k) {
            auto it = src.find(to.lattice[k]);
            if (it == src.end()) continue;
            out[to_lay.at(var, 2 * int(k) + 1)] = v[from_lay.at(var, 2 * it->second + 1)];
            out[to_lay.at(var, 2 * int(k) + 2)] = v[from_lay.at(var, 2 * it->second + 2)];
        }
    }
    return out;
}

std::vector<PointConstraint> series_initial_state(const SeriesSolution& series,
                                                  const std::vector<std::string>& vars,
                                                  int max_order) {
    std::vector<PointConstraint> out;
    for (size_t v = 0; v < vars.size(); ++v)
        for (int j = 0; j <= max_order; ++j)
            out.push_back({vars[v], j, series.eval(int(v), 0.0, j)});
    return out;
}

} // namespace

CaseResult run_case(const CaseSpec& spec) {
    auto t0 = std::chrono::steady_clock::now();
    CaseResult result;
    result.name = spec.name;

    OdeSystem ode = parse_system(spec.source);
    PolySystem poly = recast(ode);
    result.degree = degree_of(poly);

    HarmonicBasis basis;
    if (spec.trunc > 0) {
        basis = HarmonicBasis::dual(spec.omega1, spec.omega2, spec.trunc);
    } else {
        double base = poly.forcing_symbol ? poly.forcing_omega : spec.omega0;
        basis = HarmonicBasis::single(base, spec.order);
    }
    BalanceScheme scheme = scheme_for(poly, spec.name, spec.scheme);
    AlgebraicProblem prob = assemble(poly, basis, scheme, spec.variant);

    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.layout.size());
    for (const auto& seed : spec.seeds) {
        int vi = poly.var_index(seed.var);
        if (vi < 0) throw std::invalid_argument("seed names unknown variable '" + seed.var + "'");
        x0[prob.layout.at(vi, seed_coeff_index(basis, seed))] = seed.value;
    }
    if (prob.layout.has_omega) x0[prob.layout.omega_index()] = spec.omega0;

    if (spec.trunc > 0 && spec.warmup_odd_lattice) {
        HarmonicBasis warm_basis = HarmonicBasis::dual_restricted(
            spec.omega1, spec.omega2, spec.trunc,
            [](int m, int n) { return std::abs(m + n) % 2 == 1; });
        AlgebraicProblem warm_prob = assemble(poly, warm_basis, scheme, spec.variant);
        Eigen::VectorXd w0 = Eigen::VectorXd::Zero(warm_prob.layout.size());
        for (const auto& seed : spec.seeds) {
            int vi = poly.var_index(seed.var);
            w0[warm_prob.layout.at(vi, seed_coeff_index(warm_basis, seed))] =
                seed.value;
        }
        SolveReport warm = solve(warm_prob, w0, spec.solver);
        x0 = remap_dual(warm_basis, warm_prob.layout, warm.solution.data, basis, prob.layout);
    }

    result.solve = solve(prob, x0, spec.solver);
    if (!result.solve.converged && spec.seeds.empty() &&
        basis.mode == HarmonicBasis::Mode::Single) {
        // restart ladder: seed the first harmonic of the leading variable
        for (double a : {0.5, 1.5, 2.5, -1.0}) {
            Eigen::VectorXd alt = Eigen::VectorXd::Zero(prob.layout.size());
            alt[prob.layout.cos_coef(0, 1)] = a;
            if (prob.layout.has_omega) alt[prob.layout.omega_index()] = spec.omega0;
            SolveReport retry = solve(prob, alt, spec.solver);
            if (retry.converged) {
                result.solve = retry;
                break;
            }
        }
    }
    SeriesSolution series = make_series(prob, result.solve);

    // oracle comparison
    try {
        if (basis.mode == HarmonicBasis::Mode::Single) {
            double T = kTwoPi / result.solve.omega;
            double step = T / spec.oracle_step_divisor;
            std::vector<PointConstraint> init = ode.constraints;
            if (spec.oracle_on_recast) {
                Trajectory traj = integrate_reference(
                    poly, series_initial_state(series, poly.vars, 0), T, step);
                if (!spec.trajectory_csv.empty())
                    write_trajectory_csv(traj, spec.trajectory_csv);
                result.errors = error_metrics(series, spec.metric_var, traj,
                                              poly.vars[spec.metric_var], 0.0, T);
            } else {
                if (init.empty()) init = series_initial_state(series, ode.vars, 2);
                Trajectory traj = integrate_reference(ode, init, T, step);
                if (!spec.trajectory_csv.empty())
                    write_trajectory_csv(traj, spec.trajectory_csv);
                result.errors = error_metrics(series, spec.metric_var, traj,
                                              ode.vars[spec.metric_var], 0.0, T);
            }
        } else {
            // comparison span: the horizon the approximation is judged on;
            // phases drift against the 4-digit base frequencies over long
            // windows, so the span stays a modest multiple of the fast period
            double fast = kTwoPi / std::max(basis.omega1, basis.omega2);
            double span = spec.metrics_window > 0 ? spec.metrics_window : 16.0 * fast;
            double step = fast / spec.oracle_step_divisor;
            Trajectory traj =
                spec.oracle_on_recast
                    ? integrate_reference(poly, series_initial_state(series, poly.vars, 0),
                                          span, step)
                    : integrate_reference(ode, ode.constraints, span, step);
            if (!spec.trajectory_csv.empty()) write_trajectory_csv(traj, spec.trajectory_csv);
            const auto& labels = spec.oracle_on_recast ? poly.vars : ode.vars;
            result.errors = error_metrics(series, 0, traj, labels[0], 0.0, span);
            if (poly.vars.size() > 1)
                result.errors_secondary = error_metrics(series, 1, traj, labels[1], 0.0, span);
        }
    } catch (const std::exception& err) {
        result.failures.push_back(std::string("oracle: ") + err.what());
    }

    if (!result.solve.converged)
        result.failures.push_back("solver: " + (result.solve.failure.empty()
                                                    ? std::string("did not converge")
                                                    : result.solve.failure));
    if (spec.max_amplitude_error > 0 && result.errors.amplitude_error > spec.max_amplitude_error)
        result.failures.push_back("amplitude error " + std::to_string(result.errors.amplitude_error) +
                                  " exceeds " + std::to_string(spec.max_amplitude_error));
    if (spec.max_mean_error > 0 && result.errors.mean_abs_error > spec.max_mean_error)
        result.failures.push_back("mean error " + std::to_string(result.errors.mean_abs_error) +
                                  " exceeds " + std::to_string(spec.max_mean_error));
    if (spec.max_wall_seconds > 0 && result.solve.wall_seconds > spec.max_wall_seconds)
        result.failures.push_back("solve took " + std::to_string(result.solve.wall_seconds) + " s");
    result.pass = result.failures.empty();
    result.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::vector<SchemeStudyEntry> run_scheme_study(const std::string& case_name, SolveMethod method) {
    if (case_name != "pendulum" && case_name != "relativistic")
        throw std::invalid_argument("scheme study supports pendulum and relativistic");
    std::vector<SchemeStudyEntry> entries;
    for (int s = 1; s <= 3; ++s) {
        CaseSpec spec = builtin_case(case_name);
        spec.scheme = s;
        spec.solver.method = method;
        spec.max_amplitude_error = 0;
        spec.max_mean_error = 0;
        spec.max_wall_seconds = 0;
        entries.push_back({s, run_case(spec)});
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.result.errors.mean_abs_error < b.result.errors.mean_abs_error;
    });
    return entries;
}

namespace {

// N=1 amplitude equation of the forced cubic oscillator:
// s ((3/4 s + 1 - w^2)^2 + (d w)^2) = F^2 with s = a^2.
std::array<double, 3> duffing_branch_amplitudes(double w, double d, double F) {
    auto g = [&](double s) {
        double k = 0.75 * s + 1.0 - w * w;
        return s * (k * k + d * d * w * w) - F * F;
    };
    std::vector<double> roots;
    double prev = g(1e-9);
    for (int i = 1; i <= 4000 && roots.size() < 3; ++i) {
        double s = 16.0 * i / 4000.0;
        double cur = g(s);
        if (prev * cur < 0) {
            double lo = 16.0 * (i - 1) / 4000.0, hi = s;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (lo + hi);
                (g(lo) * g(mid) <= 0 ? hi : lo) = mid;
            }
            roots.push_back(std::sqrt(0.5 * (lo + hi)));
        }
        prev = cur;
    }
    if (roots.size() != 3)
        throw std::runtime_error("duffing parameters do not give three branches");
    return {roots[0], roots[1], roots[2]};
}

} // namespace

namespace {

// Single-variable second-order balance stack for the Monte-Carlo study: one
// equation, 2N+1 unknowns, the acceleration realized through A^2. Matches
// the formulation of the classical Duffing bifurcation studies and keeps the
// random-start dimension small enough for Newton to reach spurious roots.
PolySystem scalar_duffing() {
    PolySystem sys;
    sys.name = "duffing_scalar";
    sys.vars = {"x"};
    sys.forcing_symbol = "w";
    sys.forcing_omega = 2.0;
    PolyEquation eq;
    eq.kind = PolyEquation::Kind::Algebraic;
    eq.monomials.push_back({1.0, {{0, 2, 1}}, std::nullopt});
    eq.monomials.push_back({0.1, {{0, 1, 1}}, std::nullopt});
    eq.monomials.push_back({1.0, {{0, 0, 1}}, std::nullopt});
    eq.monomials.push_back({1.0, {{0, 0, 3}}, std::nullopt});
    eq.monomials.push_back({-1.5, {}, ForcingFactor{1, Phase::Cos}});
    sys.equations.push_back(eq);
    sys.finalize();
    return sys;
}

} // namespace

AlgebraicProblem monte_carlo_problem(Variant variant) {
    PolySystem poly = scalar_duffing();
    HarmonicBasis basis = HarmonicBasis::single(poly.forcing_omega, 9);
    return assemble(poly, basis, BalanceScheme::full(poly, false), variant);
}

MonteCarloResult run_monte_carlo(Variant variant, int trials, std::uint64_t seed,
                                 const Eigen::VectorXd* start_override) {
    if (trials < 100 && !start_override)
        throw std::invalid_argument("monte-carlo needs at least 100 trials");
    if (trials < 1) throw std::invalid_argument("monte-carlo needs at least one trial");

    PolySystem poly = scalar_duffing();
    PolySystem chain = recast(parse_system(corpus_source("duffing")));
    const int N = 9;
    HarmonicBasis basis = HarmonicBasis::single(poly.forcing_omega, N);
    BalanceScheme scheme = BalanceScheme::full(poly, false);
    AlgebraicProblem prob = assemble(poly, basis, scheme, variant);
    AlgebraicProblem prob_ref = assemble(poly, basis, scheme, Variant::RHB);

    SolverConfig cfg;
    cfg.method = SolveMethod::LevenbergMarquardt;
    SolverConfig newton_cfg;
    newton_cfg.method = SolveMethod::Newton;

    MonteCarloResult mc;
    mc.variant = variant;
    mc.trials = trials;
    mc.seed = seed;
    mc.order = N;

    // the three reference branches at the bifurcation frequency, seeded from
    // the phased first-harmonic amplitude equation
    const double w = poly.forcing_omega, delta = 0.1, F = 1.5;
    auto guesses = duffing_branch_amplitudes(w, delta, F);
    for (int i = 0; i < 3; ++i) {
        double a = guesses[i];
        double k = 0.75 * a * a + 1.0 - w * w;
        double den = k * k + delta * delta * w * w;
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob_ref.layout.size());
        x0[prob_ref.layout.cos_coef(0, 1)] = F * k / den;
        x0[prob_ref.layout.sin_coef(0, 1)] = F * delta * w / den;
        SolveReport rep = solve_lm(prob_ref, x0, cfg);
        if (!rep.converged)
            throw std::runtime_error("reference branch solve failed");
        SeriesSolution s = make_series(prob_ref, rep);
        mc.branch_amplitudes[i] =
            s.amplitude(0, 0.0, kTwoPi / poly.forcing_omega);
    }
    std::sort(mc.branch_amplitudes.begin(), mc.branch_amplitudes.end());
    if (mc.branch_amplitudes[0] > 0.99 * mc.branch_amplitudes[1] ||
        mc.branch_amplitudes[1] > 0.99 * mc.branch_amplitudes[2])
        throw std::runtime_error("branch references did not separate");

    const double T = kTwoPi / poly.forcing_omega;
    const double step = T / 8192.0;

    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * std::uint64_t(trial + 1)));
        std::uniform_real_distribution<double> uni(-2.0, 2.0);
        Eigen::VectorXd x0(prob.layout.size());
        for (int i = 0; i < x0.size(); ++i) x0[i] = uni(rng);
        if (start_override) x0 = *start_override;

        // classical root hunt first, damped fallback when it fails
        SolveReport rep = solve_newton(prob, x0, newton_cfg);
        if (!rep.converged) rep = solve_lm(prob, x0, cfg);
        if (!rep.converged) {
            ++mc.diverged;
            continue;
        }
        SeriesSolution s = make_series(prob, rep);
        double amp = s.amplitude(0, 0.0, T);
        std::vector<PointConstraint> init = {{"x", 0, s.eval(0, 0.0)},
                                             {"x__d1", 0, s.eval(0, 0.0, 1)}};
        Trajectory traj = integrate_reference(chain, init, T, step);
        double dev = 0;
        for (size_t j = 0; j < traj.times.size(); ++j)
            dev += std::abs(s.eval(0, traj.times[j]) - traj.states(j, 0));
        dev /= double(traj.times.size());

        if (dev > 1e-6 * std::max(amp, 1e-9)) {
            ++mc.non_physical;
            continue;
        }
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (std::abs(amp - mc.branch_amplitudes[i]) <
                std::abs(amp - mc.branch_amplitudes[best]))
                best = i;
        if (best == 0) ++mc.lower;
        else if (best == 1) ++mc.unstable;
        else ++mc.upper;
    }
    return mc;
}

std::vector<SweepPoint> run_sweep(const std::string& case_name, int order, double from,
                                  double to, int points, bool backward) {
    OdeSystem ode = parse_system(corpus_source(case_name));
    PolySystem poly = recast(ode);
    if (!poly.forcing_symbol)
        throw std::invalid_argument("sweep requires a forced system");
    if (points < 2) throw std::invalid_argument("sweep needs at least two points");

    std::vector<double> params(points);
    for (int i = 0; i < points; ++i)
        params[i] = from + (to - from) * double(i) / double(points - 1);
    if (backward) std::reverse(params.begin(), params.end());

    auto family = [&](double w) {
        PolySystem p = poly.with_forcing_omega(w);
        HarmonicBasis b = HarmonicBasis::single(w, order);
        return assemble(p, b, BalanceScheme::full(p, false), Variant::RHB);
    };
    SolverConfig cfg;
    SpectrumLayout lay{int(poly.vars.size()), order, false};
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(lay.size());
    // fallback starts: a ladder of first-harmonic excitations for points
    // where the warm start lands in a least-squares local minimum
    std::vector<Eigen::VectorXd> restarts{x0};
    for (double a : {0.5, 1.5, 2.5, -1.0}) {
        Eigen::VectorXd s = x0;
        s[lay.cos_coef(0, 1)] = a;
        restarts.push_back(s);
    }
    auto reports = rhb::sweep(family, params, x0, cfg, restarts);

    std::vector<SweepPoint> out;
    for (size_t i = 0; i < reports.size(); ++i) {
        SweepPoint pt;
        pt.omega = params[i];
        pt.converged = reports[i].converged;
        pt.iterations = reports[i].iterations;
        pt.residual = reports[i].residual_norm;
        if (pt.converged) {
            SeriesSolution s;
            s.basis = HarmonicBasis::single(params[i], order);
            s.layout = reports[i].solution.layout;
            s.coeffs = reports[i].solution.data;
            s.omega = params[i];
            pt.amplitude = s.amplitude(0, 0.0, kTwoPi / params[i]);
        }
        out.push_back(pt);
    }
    if (backward) std::reverse(out.begin(), out.end());
    return out;
}

nlohmann::ordered_json case_report_json(const CaseResult& r) {
    nlohmann::ordered_json j;
    j["case"] = r.name;
    j["variant"] = r.solve.variant;
    j["basis"] = nlohmann::ordered_json::object();
    j["basis"]["mode"] = r.solve.basis_mode;
    j["basis"][r.solve.basis_mode == "dual" ? "p" : "N"] = r.solve.basis_order;
    nlohmann::ordered_json omegas = nlohmann::ordered_json::array();
    if (r.solve.basis_mode == "dual")
        for (double w : r.solve.omegas) omegas.push_back(w);
    else
        omegas.push_back(r.solve.omega); // solved value for conservative systems
    j["basis"]["omegas"] = omegas;
    j["grid"] = {{"M", r.solve.grid_samples},
                 {"T", r.solve.grid_period},
                 {"fallback", r.solve.fallback_grid}};
    j["solver"] = {{"method", r.solve.method},
                   {"iters", r.solve.iterations},
                   {"residual", r.solve.residual_norm},
                   {"converged", r.solve.converged}};
    j["errors"] = {{"amplitude", r.errors.amplitude_error},
                   {"mean", r.errors.mean_abs_error},
                   {"max", r.errors.max_error}};
    if (r.errors_secondary)
        j["errors_y"] = {{"amplitude", r.errors_secondary->amplitude_error},
                         {"mean", r.errors_secondary->mean_abs_error},
                         {"max", r.errors_secondary->max_error}};
    j["pass"] = r.pass;
    if (!r.failures.empty()) j["failures"] = r.failures;
    j["wall_ms"] = r.wall_ms;
    return j;
}

nlohmann::ordered_json mc_report_json(const MonteCarloResult& r) {
    nlohmann::ordered_json j;
    j["case"] = "duffing-mc";
    j["variant"] = variant_name(r.variant);
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    j["order"] = r.order;
    j["branch_amplitudes"] = r.branch_amplitudes;
    j["upper_pct"] = r.pct(r.upper);
    j["lower_pct"] = r.pct(r.lower);
    j["unstable_pct"] = r.pct(r.unstable);
    j["non_physical_pct"] = r.pct(r.non_physical);
    j["diverged_pct"] = r.pct(r.diverged);
    return j;
}

void emit_case_reports(const std::vector<CaseResult>& results, const std::string& format,
                       std::ostream& out) {
    if (format == "json") {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : results) arr.push_back(case_report_json(r));
        out << arr.dump(2) << "\n";
        return;
    }
    if (format == "csv") {
        out << "case,variant,N,M,T,fallback,method,iterations,residual,"
               "amplitude_error,mean_error,max_error,pass,wall_ms\r\n";
        out << std::setprecision(17);
        for (const auto& r : results) {
            out << r.name << "," << r.solve.variant << "," << r.solve.solution.layout.n_h << ","
                << r.solve.grid_samples << "," << r.solve.grid_period << ","
                << (r.solve.fallback_grid ? 1 : 0) << "," << r.solve.method << ","
                << r.solve.iterations << "," << r.solve.residual_norm << ","
                << r.errors.amplitude_error << "," << r.errors.mean_abs_error << ","
                << r.errors.max_error << "," << (r.pass ? 1 : 0) << "," << r.wall_ms << "\r\n";
        }
        return;
    }
    // table
    out << std::left << std::setw(18) << "case" << std::setw(7) << "var" << std::setw(5) << "M"
        << std::setw(12) << "residual" << std::setw(12) << "amp err" << std::setw(12)
        << "mean err" << std::setw(6) << "pass" << "\n";
    for (const auto& r : results) {
        std::ostringstream res, amp, mean;
        res << std::scientific << std::setprecision(2) << r.solve.residual_norm;
        amp << std::scientific << std::setprecision(2) << r.errors.amplitude_error;
        mean << std::scientific << std::setprecision(2) << r.errors.mean_abs_error;
        out << std::left << std::setw(18) << r.name << std::setw(7) << r.solve.variant
            << std::setw(5) << r.solve.grid_samples << std::setw(12) << res.str()
            << std::setw(12) << amp.str() << std::setw(12) << mean.str() << std::setw(6)
            << (r.pass ? "yes" : "NO") << "\n";
    }
}

void emit_sweep_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
    out << "omega,converged,amplitude,iterations,residual\r\n";
    out << std::setprecision(17);
    for (const auto& p : points)
        out << p.omega << "," << (p.converged ? 1 : 0) << "," << p.amplitude << ","
            << p.iterations << "," << p.residual << "\r\n";
}

} // namespace rhb::bench
