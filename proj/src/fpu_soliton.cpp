// FPU solitary waves. The profile equation, with p eliminated,
//
//   c^2 r''(x) = V'(r)(x+1) - 2 V'(r)(x) + V'(r)(x-1),
//
// is solved on a periodic grid by Fourier collocation. Splitting
// V'(r) = k2 r + N(r) gives the fixed-point form r = S * N(r) with symbol
//
//   S(k) = 4 sin^2(k/2) / (c^2 k^2 - 4 k2 sin^2(k/2)),   S(0) = 1 / (c^2 - k2),
//
// which is iterated with Petviashvili's stabilizing factor.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <ostream>

#include <Eigen/Dense>

#include "spectral.hpp"
#include "todalab/solitons.hpp"

namespace todalab {

using detail::RealFft;
using detail::Spectrum;

double fpu_sound_speed(const PotentialModel& V) {
    if (V.kind != PotentialKind::FPUPolynomial) {
        throw Error("sound speed query needs an FPU potential (Toda uses c_s = 1)");
    }
    return std::sqrt(V.k2);
}

double fpu_kdv_amplitude(const PotentialModel& V, double c) {
    return (c * c - V.k2) / (2.0 * V.k3);
}

double FpuSoliton::amplitude() const {
    const auto it = std::max_element(r.begin(), r.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    return *it;
}

double FpuSoliton::centroid() const {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
        num += x[j] * r[j];
        den += r[j];
    }
    return num / den;
}

namespace {

struct Collocation {
    std::size_t n;
    int pps;
    double L;
    double h;
};

Collocation make_collocation(double L, int n_colloc) {
    const double half = 0.5 * L;
    if (!(L > 0.0) || std::abs(half - std::round(half)) > 1e-12) {
        throw Error("collocation period L must be an even integer");
    }
    const long Li = std::lround(L);
    if (n_colloc <= 0 || n_colloc % Li != 0) throw Error("N_colloc must be a positive multiple of L");
    const int pps = static_cast<int>(n_colloc / Li);
    return {static_cast<std::size_t>(n_colloc), pps, L, 1.0 / pps};
}

double nonlinear_part(const PotentialModel& V, double r) { return V.d1(r) - V.k2 * r; }

double symbol(const PotentialModel& V, double c, double k) {
    if (k == 0.0) return 1.0 / (c * c - V.k2);
    const double s2 = std::sin(0.5 * k) * std::sin(0.5 * k);
    return 4.0 * s2 / (c * c * k * k - 4.0 * V.k2 * s2);
}

void symmetrize(std::vector<double>& r) {
    const std::size_t n = r.size();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = 0.5 * (r[j] + r[(n - j) % n]);
    r.swap(out);
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

std::vector<double> apply_pointwise(const std::vector<double>& r, auto f) {
    std::vector<double> out(r.size());
    std::transform(r.begin(), r.end(), out.begin(), f);
    return out;
}

// c^2 r'' - Delta_2 V'(r) at the collocation points.
std::vector<double> defect(const RealFft& fft, const PotentialModel& V, double c, const std::vector<double>& r) {
    const Spectrum R = fft.forward(r);
    Spectrum W = fft.forward(apply_pointwise(r, [&](double x) { return V.d1(x); }));
    Spectrum D(R.size());
    for (std::size_t j = 0; j < R.size(); ++j) {
        const double k = fft.wavenumber(j);
        D[j] = -c * c * k * k * R[j] - (2.0 * std::cos(k) - 2.0) * W[j];
    }
    return fft.inverse(std::move(D));
}

// p~ = -(1/c) * integral_{x-1}^{x} V'(r~(s)) ds, i.e. symbol (1 - e^{-ik}) / (ik).
std::vector<double> recover_p(const RealFft& fft, const PotentialModel& V, double c, const std::vector<double>& r) {
    Spectrum W = fft.forward(apply_pointwise(r, [&](double x) { return V.d1(x); }));
    for (std::size_t j = 0; j < W.size(); ++j) {
        const double k = fft.wavenumber(j);
        std::complex<double> m(1.0, 0.0);
        if (k != 0.0) m = (1.0 - std::polar(1.0, -k)) / std::complex<double>(0.0, k);
        W[j] *= -m / c;
    }
    return fft.inverse(std::move(W));
}

// Newton step on G(r) = r - S*N(r), bordered with the translation mode r'.
std::vector<double> newton_step(const RealFft& fft, const PotentialModel& V, double c, const std::vector<double>& r) {
    const std::size_t n = r.size();
    // Real-space kernel of S.
    Spectrum Sk(fft.modes());
    for (std::size_t j = 0; j < Sk.size(); ++j) Sk[j] = symbol(V, c, fft.wavenumber(j));
    const std::vector<double> kernel = fft.inverse(Sk);

    Spectrum Nhat = fft.forward(apply_pointwise(r, [&](double x) { return nonlinear_part(V, x); }));
    for (std::size_t j = 0; j < Nhat.size(); ++j) Nhat[j] *= Sk[j];
    const std::vector<double> SN = fft.inverse(Nhat);
    const std::vector<double> dr = fft.inverse(detail::differentiated(fft, fft.forward(r), 1));

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double nprime = V.d2(r[j]) - V.k2;
            A(ii, static_cast<Eigen::Index>(j)) = -kernel[(i + n - j) % n] * nprime;
        }
        A(ii, ii) += 1.0;
        A(ii, static_cast<Eigen::Index>(n)) = dr[i];
        A(static_cast<Eigen::Index>(n), ii) = dr[i];
        b(ii) = -(r[i] - SN[i]);
    }
    const Eigen::VectorXd delta = A.partialPivLu().solve(b);
    std::vector<double> out(r);
    for (std::size_t i = 0; i < n; ++i) out[i] += delta(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace

FpuSoliton solve_fpu_profile(const PotentialModel& V, double c, double L, int n_colloc, const FpuSolveOptions& opt) {
    const double cs = fpu_sound_speed(V);
    if (!(c > cs)) throw Error("speed must exceed the sound speed");
    const Collocation grid = make_collocation(L, n_colloc);
    const RealFft fft(grid.n, L);

    FpuSoliton s;
    s.V = V;
    s.c = c;
    s.c_s = cs;
    s.L = L;
    s.points_per_site = grid.pps;
    s.x.resize(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) s.x[j] = -0.5 * L + static_cast<double>(j) * grid.h;

    // Long-wave seed A sech^2(B x).
    const double A = fpu_kdv_amplitude(V, c);
    const double B = std::sqrt(3.0 * (c * c - V.k2) / V.k2);
    std::vector<double> r(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) {
        const double ch = std::cosh(B * s.x[j]);
        r[j] = A / (ch * ch);
    }

    std::vector<double> Sk(fft.modes());
    for (std::size_t j = 0; j < Sk.size(); ++j) Sk[j] = symbol(V, c, fft.wavenumber(j));

    double change = 0.0;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Spectrum R = fft.forward(r);
        Spectrum T = fft.forward(apply_pointwise(r, [&](double x) { return nonlinear_part(V, x); }));
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < T.size(); ++j) {
            T[j] *= Sk[j];
            const double w = (j == 0 || 2 * j == grid.n) ? 1.0 : 2.0;
            num += w * std::norm(R[j]);
            den += w * (std::conj(R[j]) * T[j]).real();
        }
        if (!(den != 0.0) || !std::isfinite(num / den)) throw Error("Petviashvili iteration broke down");
        const double M = num / den;
        std::vector<double> next = fft.inverse(std::move(T));
        for (double& v : next) v *= M * M;
        symmetrize(next);
        change = 0.0;
        for (std::size_t j = 0; j < grid.n; ++j) change = std::max(change, std::abs(next[j] - r[j]));
        r.swap(next);
        const double scale = sup_abs(r);
        if (!std::isfinite(scale) || scale == 0.0) throw Error("Petviashvili iteration collapsed");
        if (change <= opt.tolerance * scale) {
            ++it;
            break;
        }
    }
    s.iterations = it;

    double res = sup_abs(defect(fft, V, c, r));
    for (int k = 0; k < opt.newton_steps && res > opt.residual_target; ++k) {
        std::vector<double> trial = newton_step(fft, V, c, r);
        symmetrize(trial);
        const double tres = sup_abs(defect(fft, V, c, trial));
        if (!(tres < res)) break;
        r.swap(trial);
        res = tres;
    }
    if (res > 1e-8 && change > opt.tolerance * sup_abs(r)) {
        throw Error("FPU profile did not converge (residual " + std::to_string(res) + ")");
    }

    // Single-signed, decaying profile.
    const double peak = *std::max_element(r.begin(), r.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    const double sgn = peak > 0.0 ? 1.0 : -1.0;
    for (double v : r) {
        if (sgn * v < -1e-10 * std::abs(peak)) throw Error("not a solitary wave: profile changes sign");
    }
    if (std::abs(r.front()) > 1e-9 * std::abs(peak)) {
        throw Error("collocation period too short: profile has not decayed at the domain ends");
    }

    s.residual = res;
    s.p = recover_p(fft, V, c, r);
    s.r = std::move(r);
    return s;
}

double fpu_midpoint_defect(const FpuSoliton& s) {
    const std::size_t n = s.points();
    const RealFft fft(n, s.L);
    const double h = 1.0 / s.points_per_site;
    const Spectrum R = detail::shifted(fft, fft.forward(s.r), -0.5 * h);
    const std::vector<double> rm = fft.inverse(R);
    const std::vector<double> rm2 = fft.inverse(detail::differentiated(fft, R, 2));
    const std::vector<double> W = apply_pointwise(rm, [&](double x) { return s.V.d1(x); });
    const std::size_t m = static_cast<std::size_t>(s.points_per_site);
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double lap = W[(j + m) % n] - 2.0 * W[j] + W[(j + n - m) % n];
        worst = std::max(worst, std::abs(s.c * s.c * rm2[j] - lap));
    }
    return worst;
}

namespace {

// Values of the periodic tables at lattice points n - x0, zero outside (-L/2, L/2).
class LatticeSampler {
public:
    LatticeSampler(std::size_t n, double L, int pps, const LatticeGrid& grid, double x0)
        : fft_(n, L), L_(L), pps_(pps), grid_(grid), base_(std::floor(x0)), frac_(x0 - base_) {}

    [[nodiscard]] Spectrum spectrum(const std::vector<double>& table) const {
        return detail::shifted(fft_, fft_.forward(table), frac_);
    }

    [[nodiscard]] std::vector<double> values(const Spectrum& shifted_spec, int order) const {
        const std::vector<double> t = fft_.inverse(detail::differentiated(fft_, shifted_spec, order));
        std::vector<double> out(grid_.size(), 0.0);
        const long half = std::lround(0.5 * L_);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const long k = grid_.site(i) - static_cast<long>(base_);
            if (k <= -half || k >= half) continue;
            out[i] = t[static_cast<std::size_t>((k + half) * pps_)];
        }
        return out;
    }

private:
    RealFft fft_;
    double L_;
    int pps_;
    LatticeGrid grid_;
    double base_, frac_;
};

void check_fpu_center(const LatticeGrid& grid, double c, double cs, double x0) {
    const double margin = 25.0 / solve_kappa(c / cs);
    if (x0 - static_cast<double>(grid.n_min) < margin || static_cast<double>(grid.n_max) - x0 < margin) {
        throw Error("soliton center too close to the window boundary");
    }
}

}  // namespace

LatticeField sample_fpu(const FpuSoliton& s, const LatticeGrid& grid, double x0) {
    check_fpu_center(grid, s.c, s.c_s, x0);
    const LatticeSampler smp(s.points(), s.L, s.points_per_site, grid, x0);
    return LatticeField(grid, smp.values(smp.spectrum(s.r), 0), smp.values(smp.spectrum(s.p), 0));
}

SolitonTangents fpu_tangents(const FpuSoliton& s, const LatticeGrid& grid, double x0) {
    check_fpu_center(grid, s.c, s.c_s, x0);
    const double h = 1e-3 * (s.c - s.c_s);
    const FpuSoliton lo = solve_fpu_profile(s.V, s.c - h, s.L, static_cast<int>(s.points()));
    const FpuSoliton hi = solve_fpu_profile(s.V, s.c + h, s.L, static_cast<int>(s.points()));
    const double drift = std::max({std::abs(lo.centroid() - s.centroid()), std::abs(hi.centroid() - s.centroid())});
    if (drift > 0.1) throw Error("alignment failure: profile centroids drift by more than 0.1 site");

    const LatticeSampler smp(s.points(), s.L, s.points_per_site, grid, x0);
    LatticeField ud(grid, smp.values(smp.spectrum(s.r), 1), smp.values(smp.spectrum(s.p), 1));
    ud *= -s.c;

    const LatticeField up = sample_fpu(hi, grid, x0);
    const LatticeField um = sample_fpu(lo, grid, x0);
    LatticeField uc = (1.0 / (2.0 * h)) * (up - um);
    const double dHdc = (hamiltonian(up, s.V) - hamiltonian(um, s.V)) / (2.0 * h);
    return {std::move(ud), std::move(uc), dHdc, 1.0 / dHdc};
}

ProfileJet FpuFamily::sample_jet(const LatticeGrid& grid, double c, double x) const {
    if (c < c_lo_ - 1e-12 || c > c_hi_ + 1e-12) throw Error("speed outside the tabulated FPU family");
    const std::size_t nodes = nodes_.size();
    const std::size_t deg = nodes - 1;
    // Chebyshev interpolation weights for value and first two c-derivatives.
    const double scale = 2.0 / (c_hi_ - c_lo_);
    const double t = std::clamp((c - 0.5 * (c_lo_ + c_hi_)) * scale, -1.0, 1.0);
    std::vector<double> T(nodes), dT(nodes), d2T(nodes);
    T[0] = 1.0;
    dT[0] = d2T[0] = 0.0;
    if (nodes > 1) {
        T[1] = t;
        dT[1] = 1.0;
        d2T[1] = 0.0;
    }
    for (std::size_t m = 1; m + 1 < nodes; ++m) {
        T[m + 1] = 2.0 * t * T[m] - T[m - 1];
        dT[m + 1] = 2.0 * T[m] + 2.0 * t * dT[m] - dT[m - 1];
        d2T[m + 1] = 4.0 * dT[m] + 2.0 * t * d2T[m] - d2T[m - 1];
    }
    std::vector<double> w0(nodes, 0.0), w1(nodes, 0.0), w2(nodes, 0.0);
    for (std::size_t k = 0; k < nodes; ++k) {
        const double ek = (k == 0 || k == deg) ? 0.5 : 1.0;
        for (std::size_t m = 0; m < nodes; ++m) {
            const double em = (m == 0 || m == deg) ? 0.5 : 1.0;
            const double tk = std::cos(std::numbers::pi * static_cast<double>(m * k) / static_cast<double>(deg));
            const double coef = 2.0 / static_cast<double>(deg) * ek * em * tk;
            w0[k] += coef * T[m];
            w1[k] += coef * dT[m] * scale;
            w2[k] += coef * d2T[m] * scale * scale;
        }
    }

    const std::size_t n = profiles_.front().points();
    auto combine = [&](const std::vector<double>& w, bool is_r) {
        std::vector<double> out(n, 0.0);
        for (std::size_t k = 0; k < nodes; ++k) {
            const auto& tab = is_r ? profiles_[k].r : profiles_[k].p;
            for (std::size_t j = 0; j < n; ++j) out[j] += w[k] * tab[j];
        }
        return out;
    };

    const LatticeSampler smp(n, L_, pps_, grid, x);
    ProfileJet out;
    auto fill = [&](LatticeField& f0, LatticeField* f1, LatticeField* f2, const std::vector<double>& w) {
        const Spectrum Rs = smp.spectrum(combine(w, true));
        const Spectrum Ps = smp.spectrum(combine(w, false));
        f0 = LatticeField(grid, smp.values(Rs, 0), smp.values(Ps, 0));
        if (f1) *f1 = LatticeField(grid, smp.values(Rs, 1), smp.values(Ps, 1));
        if (f2) *f2 = LatticeField(grid, smp.values(Rs, 2), smp.values(Ps, 2));
    };
    fill(out.value, &out.dx, &out.dxx, w0);
    fill(out.dc, &out.dxc, nullptr, w1);
    fill(out.dcc, nullptr, nullptr, w2);
    return out;
}

void write_profile_csv(std::ostream& os, const std::vector<double>& x, const std::vector<double>& r,
                       const std::vector<double>& p) {
    os << "x,r,p\n";
    os.precision(17);
    for (std::size_t j = 0; j < x.size(); ++j) os << x[j] << ',' << r[j] << ',' << p[j] << '\n';
}

nlohmann::json profile_sidecar(const FpuSoliton& s) {
    return {{"c", s.c}, {"c_s", s.c_s}, {"residual", s.residual}, {"L", s.L}, {"N", s.points()}};
}

nlohmann::json profile_sidecar(const TodaSoliton& s, double L, std::size_t n) {
    return {{"c", s.c}, {"kappa", s.kappa}, {"residual", 0.0}, {"L", L}, {"N", n}};
}

}  // namespace todalab
