#include <cmath>
#include <numbers>

#include "todalab/solitons.hpp"

namespace todalab {

SolitonTangents SolitonModes::tangents() const { return {ud, uc, dHdc, 1.0 / dHdc}; }

LatticeField SolitonFamily::sample(const LatticeGrid& grid, double c, double x) const {
    return sample_jet(grid, c, x).value;
}

SolitonModes SolitonFamily::modes(const LatticeGrid& grid, double c, double x) const {
    ProfileJet j = sample_jet(grid, c, x);
    SolitonModes m;
    m.c = c;
    m.x = x;
    m.ud = -c * j.dx;
    m.udd = (c * c) * j.dxx;
    m.ucd = -1.0 * j.dx;
    m.ucd.axpy(-c, j.dxc);
    m.uc = std::move(j.dc);
    m.ucc = std::move(j.dcc);
    m.u = std::move(j.value);

    const auto& V = potential();
    m.energy = hamiltonian(m.u, V);
    double dH = 0.0;
    for (std::size_t i = 0; i < m.u.size(); ++i) {
        dH += m.u.p()[i] * m.uc.p()[i] + V.d1(m.u.r()[i]) * m.uc.r()[i];
    }
    m.dHdc = dH;
    return m;
}

// ---------------------------------------------------------------------------

FpuFamily::FpuFamily(PotentialModel V, double c_lo, double c_hi, double L, int points_per_site,
                     int nodes)
    : V_(V), c_s_(fpu_sound_speed(V)), c_lo_(c_lo), c_hi_(c_hi), L_(L), pps_(points_per_site) {
    if (!(c_lo > c_s_) || !(c_hi > c_lo)) throw Error("FPU family needs c_s < c_lo < c_hi");
    if (nodes < 3) throw Error("FPU family needs at least 3 Chebyshev nodes");
    const int n_colloc = static_cast<int>(std::lround(L * points_per_site));
    for (int k = 0; k < nodes; ++k) {
        // Chebyshev points of the second kind, including the ends
        const double t = std::cos(std::numbers::pi * k / (nodes - 1));
        const double c = 0.5 * (c_lo + c_hi) + 0.5 * (c_hi - c_lo) * t;
        nodes_.push_back(c);
        profiles_.push_back(solve_fpu_profile(V, c, L, n_colloc));
    }
}

double FpuFamily::kappa(double c) const { return solve_kappa(c / c_s_); }

}  // namespace todalab
