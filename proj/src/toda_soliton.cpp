#include <cmath>
#include <limits>

#include "todalab/jet.hpp"
#include "todalab/solitons.hpp"

namespace todalab {

namespace {

// sinh(k)/k without loss for small k
double sinhc(double k) {
    if (std::abs(k) < 1e-4) return 1.0 + k * k / 6.0 + k * k * k * k / 120.0;
    return std::sinh(k) / k;
}

double log_cosh(double z) {
    const double a = std::abs(z);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

double solve_kappa(double c) {
    if (!(c > 1.0)) throw Error("subsonic speed: need c > 1");
    double lo = 1e-8;
    double hi = std::max(1.0, 3.0 * std::log(2.0 * c));
    double k = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = sinhc(k) - c;
        if (f > 0.0) hi = k; else lo = k;
        // d/dk sinh(k)/k = (k cosh k - sinh k) / k^2
        const double df = (k * std::cosh(k) - std::sinh(k)) / (k * k);
        double next = k - f / df;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (std::abs(next - k) <= 4.0 * std::numeric_limits<double>::epsilon() * k) {
            k = next;
            break;
        }
        k = next;
    }
    return k;
}

KappaDerivatives kappa_derivatives(double c) {
    const double k = solve_kappa(c);
    // From sinh k = c k:  k' = k / (cosh k - c).
    const double D = std::cosh(k) - c;
    const double k1 = k / D;
    const double dD = std::sinh(k) * k1 - 1.0;
    const double k2 = (k1 * D - k * dD) / (D * D);
    return {k, k1, k2};
}

TodaSoliton TodaSoliton::with_speed(double c) { return {c, solve_kappa(c)}; }

TodaProfilePoint toda_profile(const TodaSoliton& s, double x) {
    const double k = s.kappa;
    const double sk = std::sinh(k);
    TodaProfilePoint pt{};
    pt.q = log_cosh(k * (x - 1.0)) - log_cosh(k * x);
    // cosh^2(kx) / (cosh k(x+1) cosh k(x-1)) = 1 / (1 + sinh^2 k sech^2 kx)
    pt.r = -std::log1p(sk * sk * sech2(k * x));
    // tanh k(x-1) - tanh kx = -sinh k / (cosh k(x-1) cosh kx)
    pt.p = s.c * k * sk * sech(k * (x - 1.0)) * sech(k * x);
    return pt;
}

namespace {

void check_center(const LatticeGrid& grid, double kappa, double x0) {
    const double margin = 25.0 / kappa;
    if (x0 - static_cast<double>(grid.n_min) < margin || static_cast<double>(grid.n_max) - x0 < margin) {
        throw Error("soliton center too close to the window boundary");
    }
}

}  // namespace

LatticeField sample_toda(const TodaSoliton& s, const LatticeGrid& grid, double x0) {
    check_center(grid, s.kappa, x0);
    LatticeField u(grid);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto pt = toda_profile(s, static_cast<double>(grid.site(i)) - x0);
        u.r()[i] = pt.r;
        u.p()[i] = pt.p;
    }
    return u;
}

SolitonTangents toda_tangents(const TodaSoliton& s, const LatticeGrid& grid, double x0) {
    check_center(grid, s.kappa, x0);
    const TodaFamily family;
    const SolitonModes m = family.modes(grid, s.c, x0);

    // Centered difference of the sampled energy in c.
    const double h = 1e-4;
    const auto& V = family.potential();
    const double fd = (hamiltonian(family.sample(grid, s.c + h, x0), V) -
                       hamiltonian(family.sample(grid, s.c - h, x0), V)) / (2.0 * h);
    if (std::abs(fd - m.dHdc) > 1e-6 * std::abs(m.dHdc)) {
        throw Error("tangent inconsistency: analytic dH/dc disagrees with finite difference");
    }
    return m.tangents();
}

ProfileJet TodaFamily::sample_jet(const LatticeGrid& grid, double c, double x) const {
    const auto kd = kappa_derivatives(c);
    Jet2 kap(kd.kappa);
    kap.d[1] = kd.d1;
    kap.h[2] = kd.d2;
    const Jet2 cj = Jet2::variable(c, 1);
    const Jet2 sk = jet_sinh(kap);
    const Jet2 sk2 = sk * sk;
    const Jet2 amp = cj * kap * sk;

    ProfileJet out{LatticeField(grid), LatticeField(grid), LatticeField(grid),
                   LatticeField(grid), LatticeField(grid), LatticeField(grid)};
    auto store = [](ProfileJet& pj, std::size_t i, bool is_r, const Jet2& j) {
        auto put = [&](LatticeField& f, double v) { (is_r ? f.r() : f.p())[i] = v; };
        put(pj.value, j.v);
        put(pj.dx, j.d[0]);
        put(pj.dc, j.d[1]);
        put(pj.dxx, j.h[0]);
        put(pj.dxc, j.h[1]);
        put(pj.dcc, j.h[2]);
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Jet2 xi = Jet2::variable(static_cast<double>(grid.site(i)) - x, 0);
        const Jet2 z0 = kap * xi;
        const Jet2 z1 = kap * (xi + (-1.0));
        const Jet2 r = -jet_log1p(sk2 * jet_sech2(z0));
        const Jet2 p = amp * jet_sech(z1) * jet_sech(z0);
        store(out, i, true, r);
        store(out, i, false, p);
    }
    return out;
}

}  // namespace todalab
