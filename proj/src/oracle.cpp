#include "rhb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <stdexcept>

namespace rhb {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

using Deriv = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

Trajectory run_rk4(const Deriv& f, Eigen::VectorXd y0, double horizon, double step,
                   std::vector<std::string> labels) {
    if (step <= 0 || horizon <= 0) throw std::invalid_argument("bad integration window");
    long n = std::lround(horizon / step);
    if (n < 1) n = 1;
    double h = horizon / double(n);

    Trajectory traj;
    traj.labels = std::move(labels);
    traj.step = h;
    traj.times.resize(n + 1);
    traj.states.resize(n + 1, y0.size());

    Eigen::VectorXd y = std::move(y0);
    traj.times[0] = 0.0;
    traj.states.row(0) = y.transpose();
    for (long i = 0; i < n; ++i) {
        double t = h * double(i);
        Eigen::VectorXd k1 = f(t, y);
        Eigen::VectorXd k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
        Eigen::VectorXd k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
        Eigen::VectorXd k4 = f(t + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((i & 1023) == 0 && !y.allFinite())
            throw std::runtime_error("reference integration diverged (NaN/overflow)");
        traj.times[i + 1] = h * double(i + 1);
        traj.states.row(i + 1) = y.transpose();
    }
    if (!y.allFinite()) throw std::runtime_error("reference integration diverged (NaN/overflow)");
    return traj;
}

double initial_value(const std::vector<PointConstraint>& initial, const std::string& var,
                     int order) {
    for (const auto& c : initial)
        if (c.var == var && c.order == order) return c.value;
    throw std::invalid_argument("missing initial value for " + var +
                                std::string(order, '\''));
}

} // namespace

int Trajectory::column(const std::string& label) const {
    for (size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return int(i);
    throw std::invalid_argument("trajectory has no column '" + label + "'");
}

Trajectory integrate_reference(const OdeSystem& sys,
                               const std::vector<PointConstraint>& initial,
                               double horizon, double step) {
    const int nv = int(sys.vars.size());
    std::vector<int> top_order(nv, 0);
    std::function<void(const ExprPtr&)> scan = [&](const ExprPtr& e) {
        if (e->kind == ExprKind::Deriv) {
            int vi = sys.var_index(e->name);
            if (vi >= 0) top_order[vi] = std::max(top_order[vi], e->order);
        }
        for (const auto& c : e->children) scan(c);
    };
    for (const auto& eq : sys.equations) scan(eq);

    std::vector<int> offset(nv, 0);
    std::vector<std::string> labels;
    int dim = 0;
    for (int v = 0; v < nv; ++v) {
        if (top_order[v] < 1)
            throw std::invalid_argument("variable '" + sys.vars[v] +
                                        "' is never differentiated; cannot integrate");
        offset[v] = dim;
        for (int j = 0; j < top_order[v]; ++j)
            labels.push_back(sys.vars[v] + std::string(j, '\''));
        dim += top_order[v];
    }

    Eigen::VectorXd y0(dim);
    for (int v = 0; v < nv; ++v)
        for (int j = 0; j < top_order[v]; ++j)
            y0[offset[v] + j] = initial_value(initial, sys.vars[v], j);

    double omega_f = sys.forcing_symbol ? sys.forcing_omega : 0.0;

    auto residuals = [&, top_order, offset](double t, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& acc) {
        StateFn state = [&](const std::string& name, int order) -> double {
            int vi = sys.var_index(name);
            if (vi < 0) throw std::invalid_argument("unknown variable " + name);
            if (order < top_order[vi]) return y[offset[vi] + order];
            if (order == top_order[vi]) return acc[vi];
            throw std::invalid_argument("derivative order beyond system order");
        };
        Eigen::VectorXd r(sys.equations.size());
        for (size_t e = 0; e < sys.equations.size(); ++e)
            r[e] = eval_expr(sys.equations[e], state, omega_f * t);
        return r;
    };

    // residuals must be affine in the top-order derivatives:
    // res(a) = Mass * a + r0, solved per stage
    auto deriv = [=](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(nv);
        Eigen::VectorXd r0 = residuals(t, y, zero);
        Eigen::MatrixXd mass(nv, nv);
        for (int v = 0; v < nv; ++v) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(nv);
            e[v] = 1.0;
            mass.col(v) = residuals(t, y, e) - r0;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(mass);
        if (!lu.isInvertible())
            throw std::runtime_error("singular mass matrix during reference integration");
        Eigen::VectorXd acc = lu.solve(-r0);
        Eigen::VectorXd dy(y.size());
        for (int v = 0; v < nv; ++v) {
            for (int j = 0; j < top_order[v] - 1; ++j)
                dy[offset[v] + j] = y[offset[v] + j + 1];
            dy[offset[v] + top_order[v] - 1] = acc[v];
        }
        return dy;
    };

    { // affinity spot check: res(2e) - res(e) == res(e) - res(0)
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(nv);
        Eigen::VectorXd r0 = residuals(0.0, y0, zero);
        for (int v = 0; v < nv; ++v) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(nv);
            e[v] = 1.0;
            Eigen::VectorXd r1 = residuals(0.0, y0, e);
            Eigen::VectorXd r2 = residuals(0.0, y0, 2.0 * e);
            if (((r2 - r1) - (r1 - r0)).lpNorm<Eigen::Infinity>() >
                1e-9 * (1.0 + r1.lpNorm<Eigen::Infinity>()))
                throw std::invalid_argument(
                    "equations are not affine in the top-order derivatives");
        }
    }

    return run_rk4(deriv, std::move(y0), horizon, step, std::move(labels));
}

Trajectory integrate_reference(const PolySystem& sys,
                               const std::vector<PointConstraint>& initial,
                               double horizon, double step) {
    const int nv = int(sys.vars.size());
    std::vector<int> diff_row(nv, -1);
    for (size_t e = 0; e < sys.equations.size(); ++e)
        if (sys.equations[e].kind == PolyEquation::Kind::Differential)
            diff_row[sys.equations[e].lhs_var] = int(e);

    std::vector<int> alg_rows;
    for (size_t e = 0; e < sys.equations.size(); ++e)
        if (sys.equations[e].kind == PolyEquation::Kind::Algebraic)
            alg_rows.push_back(int(e));

    // implicit unknowns: first-derivative slots referenced inside monomials
    std::vector<int> implicit_slots;
    for (size_t s = 0; s < sys.slots().size(); ++s) {
        const auto& slot = sys.slots()[s];
        if (slot.order == 0) continue;
        if (slot.order > 1)
            throw std::invalid_argument("cannot integrate second-order slot references");
        implicit_slots.push_back(int(s));
    }
    for (int v = 0; v < nv; ++v) {
        if (diff_row[v] >= 0) continue;
        if (sys.slot_index(v, 1) < 0)
            throw std::invalid_argument("variable '" + sys.vars[v] +
                                        "' has no differential row; integrate the original system");
    }

    Eigen::VectorXd y0(nv);
    for (int v = 0; v < nv; ++v) y0[v] = initial_value(initial, sys.vars[v], 0);

    double omega_f = sys.forcing_symbol ? sys.forcing_omega : 0.0;
    const auto& slots = sys.slots();

    auto eval_with = [&, implicit_slots](double t, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& u) {
        Eigen::VectorXd sv(slots.size());
        for (size_t s = 0; s < slots.size(); ++s)
            sv[s] = slots[s].order == 0 ? y[slots[s].var] : 0.0;
        for (size_t k = 0; k < implicit_slots.size(); ++k) sv[implicit_slots[k]] = u[k];
        return sys.eval_rhs(sv, omega_f * t);
    };

    auto deriv = [=, &sys](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
        const int nu = int(implicit_slots.size());
        Eigen::VectorXd u = Eigen::VectorXd::Zero(nu);
        if (nu > 0) {
            // residual system: algebraic rows = 0 and u_slot = rhs(diff row)
            auto implicit_res = [&](const Eigen::VectorXd& uu) {
                Eigen::VectorXd all = eval_with(t, y, uu);
                Eigen::VectorXd r(nu);
                int at = 0;
                for (int e : alg_rows) r[at++] = all[e];
                for (int k = 0; k < nu && at < nu; ++k) {
                    const auto& slot = slots[implicit_slots[k]];
                    if (diff_row[slot.var] >= 0)
                        r[at++] = uu[k] - all[diff_row[slot.var]];
                }
                return r;
            };
            Eigen::VectorXd r0 = implicit_res(u);
            Eigen::MatrixXd mass(nu, nu);
            for (int k = 0; k < nu; ++k) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(nu);
                e[k] = 1.0;
                mass.col(k) = implicit_res(e) - r0;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(mass);
            if (!lu.isInvertible())
                throw std::runtime_error("singular mass matrix during reference integration");
            u = lu.solve(-r0);
        }
        Eigen::VectorXd all = eval_with(t, y, u);
        Eigen::VectorXd dy(nv);
        for (int v = 0; v < nv; ++v) {
            if (diff_row[v] >= 0) {
                dy[v] = all[diff_row[v]];
            } else {
                int si = sys.slot_index(v, 1);
                int k = int(std::find(implicit_slots.begin(), implicit_slots.end(), si) -
                            implicit_slots.begin());
                dy[v] = u[k];
            }
        }
        return dy;
    };

    std::vector<std::string> labels = sys.vars;
    return run_rk4(deriv, std::move(y0), horizon, step, std::move(labels));
}

Eigen::VectorXd fourier_bruteforce(std::span<const double> samples, int N) {
    const long M = long(samples.size());
    if (M < 64L * N)
        throw std::invalid_argument("fourier_bruteforce needs at least 64 N samples per period");
    Eigen::VectorXd r(2 * N + 1);
    double mean = 0;
    for (double v : samples) mean += v;
    r[0] = mean / double(M);
    for (int n = 1; n <= N; ++n) {
        double rc = 0, rs = 0;
        for (long j = 0; j < M; ++j) {
            double angle = kTwoPi * n * j / double(M);
            rc += samples[j] * std::cos(angle);
            rs += samples[j] * std::sin(angle);
        }
        r[2 * n - 1] = 2.0 * rc / double(M);
        r[2 * n] = 2.0 * rs / double(M);
    }
    return r;
}

namespace {

// degree-4 polynomial through 5 samples, centered coordinates
struct LocalQuartic {
    Eigen::VectorXd coef; // c0..c4 in tau = (t - t_center)/scale
    double t_center = 0, scale = 1;

    static LocalQuartic fit(const std::vector<double>& t, const Eigen::VectorXd& v, int center) {
        LocalQuartic q;
        q.t_center = t[center];
        q.scale = t[1] - t[0];
        Eigen::MatrixXd V(5, 5);
        Eigen::VectorXd b(5);
        for (int i = 0; i < 5; ++i) {
            double tau = (t[center - 2 + i] - q.t_center) / q.scale;
            double p = 1;
            for (int k = 0; k < 5; ++k) { V(i, k) = p; p *= tau; }
            b[i] = v[center - 2 + i];
        }
        q.coef = V.fullPivLu().solve(b);
        return q;
    }

    double value(double t) const {
        double tau = (t - t_center) / scale, p = 1, s = 0;
        for (int k = 0; k < 5; ++k) { s += coef[k] * p; p *= tau; }
        return s;
    }
    double deriv(double t) const {
        double tau = (t - t_center) / scale, p = 1, s = 0;
        for (int k = 1; k < 5; ++k) { s += k * coef[k] * p; p *= tau; }
        return s / scale;
    }
    double deriv2(double t) const {
        double tau = (t - t_center) / scale, p = 1, s = 0;
        for (int k = 2; k < 5; ++k) { s += k * (k - 1) * coef[k] * p; p *= tau; }
        return s / (scale * scale);
    }
};

} // namespace

double trajectory_amplitude(const Trajectory& traj, const std::string& label,
                            double t0, double span) {
    int col = traj.column(label);
    long lo = -1, hi = -1;
    for (size_t i = 0; i < traj.times.size(); ++i) {
        if (traj.times[i] < t0 - 1e-12) continue;
        if (traj.times[i] > t0 + span + 1e-12) break;
        if (lo < 0) lo = long(i);
        hi = long(i);
    }
    if (lo < 0 || hi - lo < 5) throw std::invalid_argument("window does not cover the trajectory");
    long best = lo;
    double best_v = 0;
    for (long i = lo; i <= hi; ++i) {
        double v = std::abs(traj.states(i, col));
        if (v > best_v) { best_v = v; best = i; }
    }
    long c = std::clamp(best, lo + 2, hi - 2);
    LocalQuartic q = LocalQuartic::fit(traj.times, traj.states.col(col), int(c));
    // Newton on the quartic derivative from the sampled maximum
    double t = traj.times[best];
    for (int it = 0; it < 40; ++it) {
        double d2 = q.deriv2(t);
        if (d2 == 0) break;
        double dt = q.deriv(t) / d2;
        t -= dt;
        if (std::abs(dt) < 1e-15 * std::max(1.0, std::abs(t))) break;
    }
    if (t >= traj.times[c - 2] && t <= traj.times[c + 2])
        best_v = std::max(best_v, std::abs(q.value(t)));
    return best_v;
}

double SeriesSolution::amplitude(int var, double t0, double span) const {
    double fmax = 0;
    for (double f : basis.frequencies) fmax = std::max(fmax, std::abs(f));
    long K = std::clamp<long>(std::lround(64.0 * span * fmax / kTwoPi), 4096, 1 << 20);
    double best_t = t0, best_v = 0;
    for (long i = 0; i <= K; ++i) {
        double t = t0 + span * double(i) / double(K);
        double v = std::abs(eval(var, t));
        if (v > best_v) { best_v = v; best_t = t; }
    }
    // Newton on the series derivative
    double t = best_t;
    for (int it = 0; it < 40; ++it) {
        double g = eval(var, t, 1);
        double gp = eval(var, t, 2);
        if (gp == 0) break;
        double dt = g / gp;
        t -= dt;
        if (std::abs(dt) < 1e-15 * std::max(1.0, std::abs(t))) break;
    }
    if (t >= best_t - span / K && t <= best_t + span / K)
        best_v = std::max(best_v, std::abs(eval(var, t)));
    return best_v;
}

ErrorReport error_metrics(const SeriesSolution& approx, int approx_var,
                          const Trajectory& reference, const std::string& ref_label,
                          double t0, double span) {
    if (reference.times.back() + 1e-9 < t0 + span)
        throw std::invalid_argument("reference horizon too short for the requested window");
    int col = reference.column(ref_label);
    ErrorReport rep;
    rep.period = span;

    double sum = 0, maxe = 0;
    long count = 0;
    std::vector<double> ts, es;
    for (size_t i = 0; i < reference.times.size(); ++i) {
        double t = reference.times[i];
        if (t < t0 - 1e-12 || t > t0 + span + 1e-12) continue;
        double err = std::abs(approx.eval(approx_var, t) - reference.states(i, col));
        sum += err;
        maxe = std::max(maxe, err);
        ts.push_back(t);
        es.push_back(err);
        ++count;
    }
    if (count < 2) throw std::invalid_argument("reference window holds too few samples");
    rep.mean_abs_error = sum / double(count);
    rep.max_error = maxe;
    rep.amplitude_error = std::abs(approx.amplitude(approx_var, t0, span) -
                                   trajectory_amplitude(reference, ref_label, t0, span));

    size_t stride = std::max<size_t>(1, ts.size() / 4096);
    for (size_t i = 0; i < ts.size(); i += stride) {
        rep.curve_times.push_back(ts[i]);
        rep.curve_errors.push_back(es[i]);
    }
    return rep;
}

double measure_period(const Trajectory& traj, const std::string& deriv_label) {
    int col = traj.column(deriv_label);
    std::vector<double> crossings;
    for (size_t i = 2; i + 3 < traj.times.size() && crossings.size() < 2; ++i) {
        double a = traj.states(i, col), b = traj.states(i + 1, col);
        if (a == 0.0 || a * b >= 0.0) continue;
        LocalQuartic q = LocalQuartic::fit(traj.times, traj.states.col(col), int(i));
        double t = traj.times[i] + (traj.times[i + 1] - traj.times[i]) * a / (a - b);
        for (int it = 0; it < 40; ++it) {
            double d = q.deriv(t);
            if (d == 0) break;
            double dt = q.value(t) / d;
            t -= dt;
            if (std::abs(dt) < 1e-16 * std::max(1.0, std::abs(t))) break;
        }
        crossings.push_back(t);
    }
    if (crossings.size() < 2)
        throw std::runtime_error("trajectory holds fewer than two turning points");
    return 2.0 * (crossings[1] - crossings[0]);
}

namespace {

void fft_radix2(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double angle = -kTwoPi / double(len);
        std::complex<double> wl(std::cos(angle), std::sin(angle));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

} // namespace

std::vector<double> estimate_base_frequencies(const Trajectory& traj, int count) {
    const double dt = traj.step;
    size_t n = traj.times.size();
    size_t nfft = 1;
    while (nfft * 2 <= n) nfft *= 2;
    if (nfft < 64) throw std::invalid_argument("trajectory too short for spectral estimation");
    const size_t pad = nfft * 4;
    const double bin = kTwoPi / (double(nfft) * dt);

    struct Peak { double freq, mag; };
    std::vector<Peak> peaks;

    for (int c = 0; c < traj.states.cols(); ++c) {
        double mean = traj.states.col(c).head(nfft).mean();
        std::vector<std::complex<double>> buf(pad, 0.0);
        for (size_t j = 0; j < nfft; ++j) {
            double w = 0.5 * (1.0 - std::cos(kTwoPi * double(j) / double(nfft - 1)));
            buf[j] = (traj.states(long(j), c) - mean) * w;
        }
        fft_radix2(buf);
        std::vector<double> mag(pad / 2);
        double gmax = 0;
        for (size_t k = 0; k < pad / 2; ++k) {
            mag[k] = std::abs(buf[k]);
            if (k > 0) gmax = std::max(gmax, mag[k]);
        }
        if (gmax == 0) continue;
        for (size_t k = 2; k + 2 < pad / 2; ++k) {
            if (mag[k] <= mag[k - 1] || mag[k] < mag[k + 1]) continue;
            if (mag[k] < 1e-6 * gmax) continue;
            double lm = std::log(mag[k - 1]), lc = std::log(mag[k]), lp = std::log(mag[k + 1]);
            double denom = lm - 2 * lc + lp;
            double delta = denom == 0 ? 0.0 : 0.5 * (lm - lp) / denom;
            delta = std::clamp(delta, -0.5, 0.5);
            peaks.push_back({kTwoPi * (double(k) + delta) / (double(pad) * dt), mag[k]});
        }
    }

    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        return a.mag > b.mag;
    });
    std::vector<double> chosen;
    for (const auto& p : peaks) {
        bool distinct = true;
        for (double f : chosen)
            if (std::abs(p.freq - f) < 2.0 * bin) { distinct = false; break; }
        if (distinct) chosen.push_back(p.freq);
        if (int(chosen.size()) == count) break;
    }
    if (int(chosen.size()) < count)
        throw std::runtime_error("fewer distinct spectral peaks than requested");
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "t";
    for (const auto& l : traj.labels) out << "," << l;
    out << "\r\n";
    for (size_t i = 0; i < traj.times.size(); ++i) {
        out << traj.times[i];
        for (int c = 0; c < traj.states.cols(); ++c) out << "," << traj.states(i, c);
        out << "\r\n";
    }
}

} // namespace rhb
