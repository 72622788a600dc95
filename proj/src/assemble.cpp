#include "rhb/assemble.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rhb {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr int kMaxRatioDenominator = 64;
constexpr double kRatioTolerance = 1e-9;
constexpr int kFallbackBeatPeriods = 32;

} // namespace

std::string variant_name(Variant v) {
    switch (v) {
    case Variant::RHB: return "rhb";
    case Variant::HDHB: return "hdhb";
    case Variant::AFT: return "aft";
    }
    return "?";
}

BalanceScheme BalanceScheme::full(const PolySystem& sys, bool with_constraints) {
    BalanceScheme s;
    s.ranges.assign(sys.equations.size(), Range{0, -1});
    if (with_constraints) s.constraints = sys.constraints;
    return s;
}

Eigen::MatrixXd build_A(const HarmonicBasis& basis) {
    const int B = basis.block_size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(B, B);
    for (int k = 1; k <= basis.harmonic_count(); ++k) {
        double scale = basis.mode == HarmonicBasis::Mode::Single
                           ? double(k)                 // omega applied by the residual
                           : basis.frequencies[k - 1]; // absolute frequency
        A(2 * k - 1, 2 * k) = scale;
        A(2 * k, 2 * k - 1) = -scale;
    }
    return A;
}

Eigen::MatrixXd build_E(const HarmonicBasis& basis, const CollocationGrid& grid) {
    const int B = basis.block_size();
    if (grid.samples < B)
        throw std::invalid_argument("collocation grid is smaller than the basis (M < 2N_h+1)");
    Eigen::MatrixXd E(grid.samples, B);
    for (int j = 0; j < grid.samples; ++j) {
        E(j, 0) = 1.0;
        for (int k = 1; k <= basis.harmonic_count(); ++k) {
            double angle = basis.frequencies[k - 1] * grid.times[j];
            E(j, 2 * k - 1) = std::cos(angle);
            E(j, 2 * k) = std::sin(angle);
        }
    }
    return E;
}

Eigen::MatrixXd build_pinv(const HarmonicBasis& basis, const CollocationGrid& grid) {
    const int B = basis.block_size();
    if (grid.samples < B)
        throw std::invalid_argument("collocation grid is smaller than the basis (M < 2N_h+1)");
    if (grid.fallback) {
        Eigen::MatrixXd E = build_E(basis, grid);
        return E.colPivHouseholderQr()
            .solve(Eigen::MatrixXd::Identity(grid.samples, grid.samples));
    }
    const double scale = 2.0 / grid.samples;
    Eigen::MatrixXd P(B, grid.samples);
    for (int j = 0; j < grid.samples; ++j) {
        P(0, j) = 0.5 * scale;
        for (int k = 1; k <= basis.harmonic_count(); ++k) {
            double angle = basis.frequencies[k - 1] * grid.times[j];
            P(2 * k - 1, j) = scale * std::cos(angle);
            P(2 * k, j) = scale * std::sin(angle);
        }
    }
    return P;
}

int min_collocation(int phi, const HarmonicBasis& basis) {
    if (phi < 1) throw std::invalid_argument("nonlinearity degree must be >= 1");
    if (basis.mode != HarmonicBasis::Mode::Single)
        throw std::invalid_argument("min_collocation: use min_collocation_dual for dual bases");
    return (phi + 1) * basis.order + 1; // smallest M with M > (phi+1) N
}

namespace {

// best rational approximation a/b of `ratio` by continued fractions
std::optional<std::pair<long, long>> rationalize(double ratio, long max_den, double tol) {
    double x = ratio;
    long h0 = 1, h1 = long(std::floor(x));
    long k0 = 0, k1 = 1;
    for (int it = 0; it < 64; ++it) {
        if (std::abs(ratio - double(h1) / double(k1)) <= tol * std::abs(ratio))
            return std::make_pair(h1, k1);
        double frac = x - std::floor(x);
        if (frac < 1e-15) break;
        x = 1.0 / frac;
        long a = long(std::floor(x));
        long h2 = a * h1 + h0;
        long k2 = a * k1 + k0;
        if (k2 > max_den || h2 > 100000) break;
        h0 = h1; h1 = h2;
        k0 = k1; k1 = k2;
    }
    if (std::abs(ratio - double(h1) / double(k1)) <= tol * std::abs(ratio))
        return std::make_pair(h1, k1);
    return std::nullopt;
}

} // namespace

std::optional<DualSampling> min_collocation_dual(int phi, const HarmonicBasis& basis) {
    if (basis.mode != HarmonicBasis::Mode::Dual)
        throw std::invalid_argument("min_collocation_dual requires a dual basis");
    auto ab = rationalize(basis.omega1 / basis.omega2, kMaxRatioDenominator, kRatioTolerance);
    if (!ab) return std::nullopt;
    auto [a, b] = *ab;
    long g = std::gcd(a, b);
    a /= g; b /= g;
    double gcd_freq = 0.5 * (basis.omega1 / double(a) + basis.omega2 / double(b));
    DualSampling s;
    s.samples = int(std::floor((phi + 1) * basis.trunc *
                               std::max(basis.omega1, basis.omega2) / gcd_freq)) + 1;
    s.period = kTwoPi / gcd_freq;
    return s;
}

CollocationGrid variant_grid(Variant variant, int phi, const HarmonicBasis& basis) {
    if (basis.mode == HarmonicBasis::Mode::Single) {
        int M = 0;
        switch (variant) {
        case Variant::HDHB: M = 2 * basis.order + 1; break;
        case Variant::AFT: M = 2 * phi * basis.order + 1; break;
        case Variant::RHB: M = min_collocation(phi, basis); break;
        }
        return CollocationGrid::uniform(M, kTwoPi / basis.omega);
    }
    if (variant != Variant::RHB)
        throw std::invalid_argument("dual-frequency bases support the RHB variant only");
    if (auto s = min_collocation_dual(phi, basis))
        return CollocationGrid::uniform(s->samples, s->period);
    // Least-squares fallback for non-rationalizable frequency pairs.
    int M = 4 * ((phi + 1) * basis.trunc * (basis.trunc + 1) + 1);
    double wmin = *std::min_element(basis.frequencies.begin(), basis.frequencies.end());
    double window = kFallbackBeatPeriods * kTwoPi / wmin;
    return CollocationGrid::low_discrepancy(M, window);
}

int alias_of(int n, int L) {
    if (L < 1) throw std::invalid_argument("limit wave number must be >= 1");
    int best_na = 0;
    long best_m = 0;
    bool have = false;
    long m0 = long(std::floor(double(n) / (2.0 * L)));
    for (long m = m0 - 2; m <= m0 + 2; ++m) {
        int na = int(n - 2 * m * L);
        if (na < -L || na > L) continue;
        if (!have || std::abs(na) < std::abs(best_na) ||
            (std::abs(na) == std::abs(best_na) && std::abs(m) < std::abs(best_m))) {
            best_na = na;
            best_m = m;
            have = true;
        }
    }
    return best_na;
}

namespace {

struct ResolvedConstraint {
    int var = 0;
    int order = 0;
    double value = 0.0;
};

struct Workspace {
    PolySystem sys;
    HarmonicBasis basis;
    CollocationGrid grid;
    SpectrumLayout layout;
    bool dual = false;

    Eigen::MatrixXd Estar;
    std::vector<Eigen::MatrixXd> EA;       // d -> E A^d
    std::vector<Eigen::RowVectorXd> e0A;   // d -> e0^T A^d
    Eigen::MatrixXd A;
    std::vector<double> psi;               // forcing phase at samples
    std::vector<std::vector<int>> selected; // balanced row indices per equation
    std::vector<ResolvedConstraint> cons;
    int rows = 0;

    double omega_of(const Eigen::VectorXd& x) const {
        if (dual) return 1.0; // absolute frequencies live inside A
        return layout.has_omega ? x[layout.omega_index()] : basis.omega;
    }

    // samples of d^order/dt^order of variable v
    Eigen::VectorXd slot_samples(const Eigen::VectorXd& x, int var, int order,
                                 double omega) const {
        Eigen::VectorXd s = EA[order] * x.segment(layout.at(var, 0), layout.block());
        if (!dual && order > 0) s *= std::pow(omega, order);
        return s;
    }
};

std::vector<int> selected_rows(const BalanceScheme::Range& r, int nh) {
    int last = r.last < 0 ? nh : r.last;
    std::vector<int> rows;
    if (r.first <= 0) rows.push_back(0);
    for (int h = std::max(1, r.first); h <= last; ++h) {
        rows.push_back(2 * h - 1);
        rows.push_back(2 * h);
    }
    return rows;
}

} // namespace

AlgebraicProblem assemble_on_grid(const PolySystem& sys, const HarmonicBasis& basis,
                                  const BalanceScheme& scheme, Variant variant,
                                  const CollocationGrid& grid) {
    auto ws = std::make_shared<Workspace>();
    ws->sys = sys;
    ws->basis = basis;
    ws->grid = grid;
    ws->dual = basis.mode == HarmonicBasis::Mode::Dual;

    if (ws->dual && sys.conservative)
        throw std::invalid_argument("dual-frequency solving requires known base frequencies");
    if (ws->dual && sys.forcing_symbol)
        throw std::invalid_argument("forcing terms are not supported in dual mode");

    ws->layout.n_vars = int(sys.vars.size());
    ws->layout.n_h = basis.harmonic_count();
    ws->layout.has_omega = sys.conservative && !ws->dual;

    const int B = ws->layout.block();
    const int M = grid.samples;

    Eigen::MatrixXd E = build_E(basis, grid);
    ws->Estar = build_pinv(basis, grid);
    ws->A = build_A(basis);

    const int dmax = std::max(1, sys.max_deriv_order());
    ws->EA.resize(dmax + 1);
    ws->e0A.resize(dmax + 1);
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Identity(B, B);
    Eigen::RowVectorXd e0 = Eigen::RowVectorXd::Zero(B);
    e0[0] = 1.0;
    for (int k = 1; k <= basis.harmonic_count(); ++k) e0[2 * k - 1] = 1.0;
    for (int d = 0; d <= dmax; ++d) {
        ws->EA[d] = E * Ad;
        ws->e0A[d] = e0 * Ad;
        Ad = Ad * ws->A;
    }

    ws->psi.resize(M);
    for (int j = 0; j < M; ++j)
        ws->psi[j] = sys.forcing_symbol ? sys.forcing_omega * grid.times[j] : 0.0;

    BalanceScheme::Range def{0, -1};
    ws->selected.resize(sys.equations.size());
    if (!scheme.ranges.empty() && scheme.ranges.size() != sys.equations.size())
        throw std::invalid_argument("balance scheme range count does not match the equations");
    int rows = 0;
    for (size_t e = 0; e < sys.equations.size(); ++e) {
        const auto& r = scheme.ranges.empty() ? def : scheme.ranges[e];
        ws->selected[e] = selected_rows(r, basis.harmonic_count());
        rows += int(ws->selected[e].size());
    }
    for (const auto& c : scheme.constraints) {
        int vi = sys.var_index(c.var);
        if (vi < 0) throw std::invalid_argument("constraint on unknown variable '" + c.var + "'");
        if (c.order > dmax)
            throw std::invalid_argument("constraint derivative order exceeds the assembled order");
        ws->cons.push_back({vi, c.order, c.value});
        ++rows;
    }
    ws->rows = rows;

    const int unknowns = ws->layout.size();
    if (rows < unknowns)
        throw std::invalid_argument("balance scheme leaves the system underdetermined (" +
                                    std::to_string(rows) + " rows, " +
                                    std::to_string(unknowns) + " unknowns)");

    AlgebraicProblem prob;
    prob.unknowns = unknowns;
    prob.equations = rows;
    prob.variant = variant;
    prob.layout = ws->layout;
    prob.basis = basis;
    prob.grid = grid;
    prob.fallback_grid = grid.fallback;

    prob.residual = [ws](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const auto& sys = ws->sys;
        const auto& L = ws->layout;
        const int M = ws->grid.samples;
        const double omega = ws->omega_of(x);

        // time-domain samples per referenced slot
        const auto& slots = sys.slots();
        Eigen::MatrixXd S(M, slots.size());
        for (size_t s = 0; s < slots.size(); ++s)
            S.col(s) = ws->slot_samples(x, slots[s].var, slots[s].order, omega);

        Eigen::MatrixXd F(M, sys.equations.size());
        for (int j = 0; j < M; ++j)
            F.row(j) = sys.eval_rhs(S.row(j).transpose(), ws->psi[j]).transpose();

        Eigen::VectorXd out(ws->rows);
        int at = 0;
        for (size_t e = 0; e < sys.equations.size(); ++e) {
            Eigen::VectorXd proj = ws->Estar * F.col(e);
            Eigen::VectorXd full;
            if (sys.equations[e].kind == PolyEquation::Kind::Differential) {
                Eigen::VectorXd deriv =
                    ws->A * x.segment(L.at(sys.equations[e].lhs_var, 0), L.block());
                if (!ws->dual) deriv *= omega;
                full = deriv - proj;
            } else {
                full = proj;
            }
            for (int r : ws->selected[e]) out[at++] = full[r];
        }
        for (const auto& c : ws->cons) {
            double scale = (!ws->dual && c.order > 0) ? std::pow(omega, c.order) : 1.0;
            out[at++] = scale * ws->e0A[c.order].dot(
                            x.segment(L.at(c.var, 0), L.block())) - c.value;
        }
        return out;
    };

    prob.jacobian = [ws](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
        const auto& sys = ws->sys;
        const auto& L = ws->layout;
        const int M = ws->grid.samples;
        const int B = L.block();
        const double omega = ws->omega_of(x);
        const auto& slots = sys.slots();

        Eigen::MatrixXd S(M, slots.size());
        for (size_t s = 0; s < slots.size(); ++s)
            S.col(s) = ws->slot_samples(x, slots[s].var, slots[s].order, omega);

        // partials of every equation w.r.t. every slot, per sample
        std::vector<Eigen::MatrixXd> P(M);
        for (int j = 0; j < M; ++j)
            P[j] = sys.eval_partials(S.row(j).transpose(), ws->psi[j]);

        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(ws->rows, L.size());
        int at = 0;
        for (size_t e = 0; e < sys.equations.size(); ++e) {
            const auto& sel = ws->selected[e];
            const double sign = sys.equations[e].kind == PolyEquation::Kind::Differential
                                    ? -1.0
                                    : 1.0;
            // d(E* f)/dxhat summed over slots, then the A-part for the
            // differential left side
            Eigen::MatrixXd block = Eigen::MatrixXd::Zero(B, L.size());
            Eigen::VectorXd diag(M);
            for (size_t s = 0; s < slots.size(); ++s) {
                for (int j = 0; j < M; ++j) diag[j] = P[j](e, s);
                if (diag.isZero(0.0)) continue;
                double wfac = (!ws->dual && slots[s].order > 0)
                                  ? std::pow(omega, slots[s].order)
                                  : 1.0;
                block.middleCols(L.at(slots[s].var, 0), B).noalias() +=
                    wfac * (ws->Estar * diag.asDiagonal() * ws->EA[slots[s].order]);
            }
            block *= sign; // differential: -E* dF; algebraic: +E* dF
            if (sys.equations[e].kind == PolyEquation::Kind::Differential) {
                int lv = sys.equations[e].lhs_var;
                block.middleCols(L.at(lv, 0), B) += (ws->dual ? 1.0 : omega) * ws->A;
            }
            if (L.has_omega) {
                // chain rule through omega: derivative slots scale with
                // omega^d, the left side with omega
                Eigen::VectorXd col = Eigen::VectorXd::Zero(B);
                for (size_t s = 0; s < slots.size(); ++s) {
                    int d = slots[s].order;
                    if (d == 0) continue;
                    Eigen::VectorXd ds = ws->EA[d] * x.segment(L.at(slots[s].var, 0), B);
                    ds *= d * std::pow(omega, d - 1);
                    Eigen::VectorXd w(M);
                    for (int j = 0; j < M; ++j) w[j] = P[j](e, s) * ds[j];
                    col += ws->Estar * w;
                }
                col *= sign;
                if (sys.equations[e].kind == PolyEquation::Kind::Differential)
                    col += ws->A * x.segment(L.at(sys.equations[e].lhs_var, 0), B);
                for (size_t r = 0; r < sel.size(); ++r)
                    J(at + int(r), L.omega_index()) = col[sel[r]];
            }
            for (size_t r = 0; r < sel.size(); ++r)
                J.row(at + int(r)).head(L.size() - (L.has_omega ? 1 : 0)) =
                    block.row(sel[r]).head(L.size() - (L.has_omega ? 1 : 0));
            at += int(sel.size());
        }
        for (const auto& c : ws->cons) {
            double scale = (!ws->dual && c.order > 0) ? std::pow(omega, c.order) : 1.0;
            J.row(at).segment(L.at(c.var, 0), B) = scale * ws->e0A[c.order];
            if (L.has_omega && c.order > 0) {
                J(at, L.omega_index()) =
                    c.order * std::pow(omega, c.order - 1) *
                    ws->e0A[c.order].dot(x.segment(L.at(c.var, 0), B));
            }
            ++at;
        }
        return J;
    };

    return prob;
}

AlgebraicProblem assemble(const PolySystem& sys, const HarmonicBasis& basis,
                          const BalanceScheme& scheme, Variant variant) {
    return assemble_on_grid(sys, basis, scheme, variant,
                            variant_grid(variant, degree_of(sys), basis));
}

} // namespace rhb
