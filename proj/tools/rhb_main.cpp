#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rhb/bench.hpp"
#include "rhb/parser.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string load_system_text(const std::string& arg) {
    if (arg.rfind("builtin:", 0) == 0) return rhb::bench::corpus_source(arg.substr(8));
    std::ifstream in(arg);
    if (!in) throw UsageError("cannot read system file '" + arg + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output path '" + path + "'");
    return file;
}

rhb::Variant parse_variant(const std::string& v) {
    if (v == "rhb") return rhb::Variant::RHB;
    if (v == "hdhb") return rhb::Variant::HDHB;
    if (v == "aft") return rhb::Variant::AFT;
    throw CLI::ValidationError("--variant must be rhb, hdhb or aft");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-accuracy periodic and quasi-periodic solutions of nonlinear "
                 "dynamical systems via polynomial recasting and reconstruction "
                 "harmonic balance"};
    app.require_subcommand(1);

    std::string system_arg, out_path, format = "table", variant = "rhb", solver = "lm";
    int order = 25, trunc = 0, scheme = 0, points = 81, trials = 1000;
    double from = 0.5, to = 2.5, omega0 = 1.0, omega1 = 0, omega2 = 0;
    std::uint64_t seed = 987654321ULL;
    bool backward = false;

    auto add_common = [&](CLI::App* cmd, bool with_variant = true) {
        cmd->add_option("--system", system_arg, "system file or builtin:NAME")->required();
        if (with_variant)
            cmd->add_option("--variant", variant, "rhb|hdhb|aft")->capture_default_str();
        cmd->add_option("--out", out_path, "output path (default stdout)");
        cmd->add_option("--format", format, "csv|json|table")->capture_default_str();
    };

    auto* cmd_recast = app.add_subcommand("recast", "parse and recast to a polynomial DAE");
    cmd_recast->add_option("--system", system_arg, "system file or builtin:NAME")->required();
    cmd_recast->add_option("--out", out_path, "output path (default stdout)");

    auto* cmd_solve = app.add_subcommand("solve", "solve one case and report errors");
    add_common(cmd_solve);
    cmd_solve->add_option("--order", order, "harmonic order N")->capture_default_str();
    cmd_solve->add_option("--trunc", trunc, "dual-frequency truncation p (enables RMHB)");
    cmd_solve->add_option("--omega1", omega1, "first base frequency (dual)");
    cmd_solve->add_option("--omega2", omega2, "second base frequency (dual)");
    cmd_solve->add_option("--omega0", omega0, "response frequency guess")->capture_default_str();
    cmd_solve->add_option("--scheme", scheme, "constraint scheme 1|2|3 (0 = default)");
    cmd_solve->add_option("--solver", solver, "newton|lm")->capture_default_str();
    std::string trajectory_path;
    cmd_solve->add_option("--trajectory", trajectory_path,
                          "write the reference trajectory CSV to this path");

    auto* cmd_sweep = app.add_subcommand("sweep", "warm-started forcing-frequency sweep");
    add_common(cmd_sweep, false);
    cmd_sweep->add_option("--order", order, "harmonic order N")->capture_default_str();
    cmd_sweep->add_option("--from", from, "start frequency")->capture_default_str();
    cmd_sweep->add_option("--to", to, "end frequency")->capture_default_str();
    cmd_sweep->add_option("--points", points, "grid points")->capture_default_str();
    cmd_sweep->add_flag("--backward", backward, "sweep from high to low frequency");

    auto* cmd_scheme = app.add_subcommand("scheme-study", "compare constraint schemes");
    add_common(cmd_scheme, false);
    cmd_scheme->add_option("--solver", solver, "newton|lm")->capture_default_str();

    auto* cmd_mc = app.add_subcommand("mc", "Monte-Carlo branch statistics for the Duffing case");
    cmd_mc->add_option("--variant", variant, "rhb|hdhb")->capture_default_str();
    cmd_mc->add_option("--trials", trials, "number of random starts")->capture_default_str();
    cmd_mc->add_option("--seed", seed, "random seed")->capture_default_str();
    cmd_mc->add_option("--out", out_path, "output path (default stdout)");
    cmd_mc->add_option("--format", format, "csv|json|table")->capture_default_str();

    auto* cmd_bench = app.add_subcommand("bench", "run the full acceptance suite");
    (void)cmd_bench;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::ofstream file;
        if (app.got_subcommand("recast")) {
            rhb::OdeSystem ode = rhb::parse_system(load_system_text(system_arg));
            rhb::PolySystem poly = rhb::recast(ode);
            auto& out = open_out(out_path, file);
            out << "# canonical form (degree " << rhb::degree_of(poly) << ")\n";
            out << poly.canonical_text();
            out << poly.to_json().dump(2) << "\n";
            return 0;
        }
        if (app.got_subcommand("solve")) {
            rhb::bench::CaseSpec spec;
            std::string name = system_arg.rfind("builtin:", 0) == 0 ? system_arg.substr(8) : "";
            if (!name.empty()) {
                spec = rhb::bench::builtin_case(name);
            } else {
                spec.name = "user";
                spec.source = load_system_text(system_arg);
            }
            // explicit overrides make the run exploratory: the builtin pass
            // gates belong to the canonical settings
            bool overridden = cmd_solve->count("--order") || cmd_solve->count("--trunc") ||
                              cmd_solve->count("--scheme") || cmd_solve->count("--variant") ||
                              cmd_solve->count("--solver") || cmd_solve->count("--omega0");
            if (overridden) {
                spec.max_amplitude_error = 0;
                spec.max_mean_error = 0;
                spec.max_wall_seconds = 0;
            }
            if (cmd_solve->count("--order")) spec.order = order;
            if (cmd_solve->count("--trunc")) spec.trunc = trunc;
            if (cmd_solve->count("--omega1")) spec.omega1 = omega1;
            if (cmd_solve->count("--omega2")) spec.omega2 = omega2;
            if (cmd_solve->count("--omega0")) spec.omega0 = omega0;
            if (cmd_solve->count("--scheme")) spec.scheme = scheme;
            spec.trajectory_csv = trajectory_path;
            spec.variant = parse_variant(variant);
            spec.solver.method =
                solver == "newton" ? rhb::SolveMethod::Newton : rhb::SolveMethod::LevenbergMarquardt;
            rhb::bench::CaseResult r = rhb::bench::run_case(spec);
            auto& out = open_out(out_path, file);
            rhb::bench::emit_case_reports({r}, format, out);
            return r.pass ? 0 : 1;
        }
        if (app.got_subcommand("sweep")) {
            std::string name = system_arg.rfind("builtin:", 0) == 0 ? system_arg.substr(8) : "";
            if (name.empty()) throw std::runtime_error("sweep expects --system builtin:NAME");
            auto pts = rhb::bench::run_sweep(name, order, from, to, points, backward);
            auto& out = open_out(out_path, file);
            rhb::bench::emit_sweep_csv(pts, out);
            return 0;
        }
        if (app.got_subcommand("scheme-study")) {
            std::string name = system_arg.rfind("builtin:", 0) == 0 ? system_arg.substr(8) : "";
            auto entries = rhb::bench::run_scheme_study(
                name, solver == "newton" ? rhb::SolveMethod::Newton
                                         : rhb::SolveMethod::LevenbergMarquardt);
            auto& out = open_out(out_path, file);
            if (format == "json") {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const auto& e : entries) {
                    nlohmann::ordered_json j = rhb::bench::case_report_json(e.result);
                    j["scheme"] = e.scheme;
                    arr.push_back(j);
                }
                out << arr.dump(2) << "\n";
            } else {
                out << "ordered by mean error (best first):\n";
                for (const auto& e : entries) {
                    std::ostringstream line;
                    line.setf(std::ios::scientific);
                    line.precision(3);
                    line << "scheme " << e.scheme << ": mean "
                         << e.result.errors.mean_abs_error << "  amplitude "
                         << e.result.errors.amplitude_error
                         << (e.result.solve.converged ? "" : "  (not converged)");
                    out << line.str() << "\n";
                }
            }
            return 0;
        }
        if (app.got_subcommand("mc")) {
            auto r = rhb::bench::run_monte_carlo(parse_variant(variant), trials, seed);
            auto& out = open_out(out_path, file);
            out << rhb::bench::mc_report_json(r).dump(2) << "\n";
            return 0;
        }
        if (app.got_subcommand("bench")) {
            auto criteria = rhb::bench::run_acceptance(std::cout);
            for (const auto& c : criteria)
                if (!c.pass) return 1;
            return 0;
        }
    } catch (const rhb::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
