#include "rhb/basis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace rhb {

namespace {

std::vector<std::pair<int, int>> build_lattice(double w1, double w2, int p,
                                               const std::function<bool(int, int)>& keep) {
    std::vector<std::pair<int, int>> raw;
    for (int m = -p; m <= p; ++m)
        for (int n = -p + std::abs(m); std::abs(m) + std::abs(n) <= p; ++n) {
            if (m == 0 && n == 0) continue;
            double f = m * w1 + n * w2;
            int mm = m, nn = n;
            if (f < 0) { mm = -m; nn = -n; f = -f; }
            if (f == 0.0) continue; // degenerate pair, folded into the constant
            if (keep && !keep(mm, nn)) continue;
            raw.emplace_back(mm, nn);
        }
    std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
        int sa = std::abs(a.first) + std::abs(a.second);
        int sb = std::abs(b.first) + std::abs(b.second);
        return std::tie(sa, a.first, a.second) < std::tie(sb, b.first, b.second);
    });
    raw.erase(std::unique(raw.begin(), raw.end()), raw.end());

    // drop entries duplicating an earlier effective frequency (commensurate pairs)
    std::vector<std::pair<int, int>> out;
    std::vector<double> freqs;
    for (auto& mn : raw) {
        double f = mn.first * w1 + mn.second * w2;
        bool dup = false;
        for (double g : freqs)
            if (std::abs(f - g) <= 1e-9 * std::max(1.0, std::abs(f))) { dup = true; break; }
        if (dup) continue;
        freqs.push_back(f);
        out.push_back(mn);
    }
    return out;
}

} // namespace

HarmonicBasis HarmonicBasis::single(double omega, int N) {
    if (N < 1) throw std::invalid_argument("harmonic order must be >= 1");
    HarmonicBasis b;
    b.mode = Mode::Single;
    b.omega = omega;
    b.order = N;
    b.frequencies.resize(N);
    for (int n = 1; n <= N; ++n) b.frequencies[n - 1] = n * omega;
    return b;
}

HarmonicBasis HarmonicBasis::dual(double omega1, double omega2, int p) {
    return dual_restricted(omega1, omega2, p, nullptr);
}

HarmonicBasis HarmonicBasis::dual_restricted(double omega1, double omega2, int p,
                                             const std::function<bool(int, int)>& keep) {
    if (p < 1) throw std::invalid_argument("lattice truncation must be >= 1");
    if (omega1 <= 0 || omega2 <= 0) throw std::invalid_argument("base frequencies must be positive");
    HarmonicBasis b;
    b.mode = Mode::Dual;
    b.omega1 = omega1;
    b.omega2 = omega2;
    b.trunc = p;
    b.lattice = build_lattice(omega1, omega2, p, keep);
    for (auto& [m, n] : b.lattice) b.frequencies.push_back(m * omega1 + n * omega2);
    return b;
}

CollocationGrid CollocationGrid::uniform(int M, double period) {
    CollocationGrid g;
    g.samples = M;
    g.period = period;
    g.times.resize(M);
    for (int j = 0; j < M; ++j) g.times[j] = period * j / M;
    return g;
}

CollocationGrid CollocationGrid::low_discrepancy(int M, double window) {
    CollocationGrid g;
    g.samples = M;
    g.period = window;
    g.fallback = true;
    const double golden = 0.61803398874989484820;
    g.times.resize(M);
    for (int j = 0; j < M; ++j) {
        double u = std::fmod((j + 1) * golden, 1.0);
        g.times[j] = window * u;
    }
    std::sort(g.times.begin(), g.times.end());
    for (int j = 1; j < M; ++j)
        if (g.times[j] <= g.times[j - 1])
            throw std::runtime_error("low-discrepancy grid produced repeated times");
    return g;
}

double eval_series(const HarmonicBasis& basis, const SpectrumLayout& layout,
                   const Eigen::VectorXd& coeffs, int var, double t,
                   int deriv_order, std::optional<double> omega) {
    const int nh = layout.n_h;
    double sum = deriv_order == 0 ? coeffs[layout.constant(var)] : 0.0;
    for (int k = 1; k <= nh; ++k) {
        double w = basis.frequencies[k - 1];
        if (basis.mode == HarmonicBasis::Mode::Single && omega)
            w = *omega * k;
        double a = coeffs[layout.cos_coef(var, k)];
        double b = coeffs[layout.sin_coef(var, k)];
        // rotate (a, b) by deriv_order quarter turns with frequency powers
        double scale = std::pow(w, deriv_order);
        double angle = w * t;
        double c = std::cos(angle), s = std::sin(angle);
        switch (deriv_order % 4) {
        case 0: sum += scale * (a * c + b * s); break;
        case 1: sum += scale * (-a * s + b * c); break;
        case 2: sum += scale * (-a * c - b * s); break;
        case 3: sum += scale * (a * s - b * c); break;
        }
    }
    return sum;
}

} // namespace rhb
