#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "todalab/modulation.hpp"

namespace todalab {

namespace {

struct PairedModes {
    SolitonModes m;
    LatticeField J_ud, J_uc, J_udd, J_ucd, J_ucc;
};

PairedModes paired(const SolitonFamily& family, const LatticeGrid& grid, double c, double x) {
    PairedModes pm{family.modes(grid, c, x), {}, {}, {}, {}, {}};
    pm.J_ud = apply_J_inverse(pm.m.ud).value;
    pm.J_uc = apply_J_inverse(pm.m.uc).value;
    pm.J_udd = apply_J_inverse(pm.m.udd).value;
    pm.J_ucd = apply_J_inverse(pm.m.ucd).value;
    pm.J_ucc = apply_J_inverse(pm.m.ucc).value;
    return pm;
}

struct Residual {
    double F1, F2;
    [[nodiscard]] double size() const { return std::abs(F1) + std::abs(F2); }
};

Residual residual(const PairedModes& pm, const LatticeField& u, const LatticeField& ut) {
    return {inner(u - pm.m.u, pm.J_ud), inner(ut - pm.m.u, pm.J_uc)};
}

}  // namespace

ModulationState solve_constraints(const LatticeField& u, const LatticeField& u_minus_v1, double c_init,
                                  double gamma_init, const SolitonFamily& family, const ConstraintOptions& opt) {
    if (!(u.grid() == u_minus_v1.grid())) throw Error("grid mismatch");
    const LatticeGrid& grid = u.grid();
    double c = c_init;
    double x = c_init * gamma_init;
    PairedModes pm = paired(family, grid, c, x);
    Residual F = residual(pm, u, u_minus_v1);
    bool stalled = false;  // no decrease possible at the roundoff floor

    for (int it = 0;; ++it) {
        const double D = pm.m.dHdc;
        const LatticeField d1 = u - pm.m.u;
        const LatticeField d2 = u_minus_v1 - pm.m.u;
        // Jacobian in (c, x); d/dx u_c = ud / c, d/dx ud = udd / c, d/dx uc = (ucd - ud / c) / c.
        const double a11 = -inner(pm.m.uc, pm.J_ud) + inner(d1, pm.J_ucd);
        const double a12 = (-inner(pm.m.ud, pm.J_ud) + inner(d1, pm.J_udd)) / c;
        const double a21 = -inner(pm.m.uc, pm.J_uc) + inner(d2, pm.J_ucc);
        LatticeField J_uxc = pm.J_ucd;
        J_uxc.axpy(-1.0 / c, pm.J_ud);
        const double a22 = (-inner(pm.m.ud, pm.J_uc) + inner(d2, J_uxc)) / c;
        const double det_cx = a11 * a22 - a12 * a21;

        if (F.size() <= opt.tolerance * std::abs(D) || stalled) {
            ModulationState s;
            s.c = c;
            s.x = x;
            s.gamma = x / c;
            s.F1 = F.F1;
            s.F2 = F.F2;
            s.det = det_cx * c;
            s.iterations = it;
            s.modes = std::move(pm.m);
            return s;
        }
        if (it >= opt.max_iterations || det_cx == 0.0 || !std::isfinite(det_cx)) {
            throw Error("left tubular neighborhood (constraint Newton did not converge)");
        }

        double dc = -(a22 * F.F1 - a12 * F.F2) / det_cx;
        double dx = -(-a21 * F.F1 + a11 * F.F2) / det_cx;
        if (std::max(std::abs(dc), std::abs(dx)) > opt.max_step) {
            throw Error("left tubular neighborhood (Newton step exceeds " + std::to_string(opt.max_step) + ")");
        }
        // Halve the step while the residual grows.
        for (int k = 0;; ++k) {
            const double cn = c + dc;
            if (cn <= family.c_min() || cn >= family.c_max()) {
                throw Error("left tubular neighborhood (speed left the family range)");
            }
            PairedModes trial = paired(family, grid, cn, x + dx);
            const Residual Ft = residual(trial, u, u_minus_v1);
            if (k >= 6 && Ft.size() >= F.size() && F.size() <= 1e-8 * std::abs(D)) {
                stalled = true;
                break;
            }
            if (Ft.size() < F.size() || k >= 6) {
                c = cn;
                x += dx;
                pm = std::move(trial);
                F = Ft;
                break;
            }
            dc *= 0.5;
            dx *= 0.5;
        }
    }
}

NeutralPairing neutral_pairing(const SolitonTangents& t) {
    NeutralPairing np{apply_J_inverse(t.ud).value, apply_J_inverse(t.uc).value, t.dHdc, 0.0};
    np.X = inner(t.uc, np.J_uc);
    return np;
}

namespace {

// l2 mass of v where J^{-1} uc has settled to its right-edge value.
double plateau_mass(const LatticeField& v, const LatticeField& J_uc) {
    const std::size_t n = J_uc.size();
    const double er = J_uc.r()[n - 1], ep = J_uc.p()[n - 1];
    const double tol = 1e-12 * std::max(J_uc.max_abs(), 1e-300);
    std::size_t start = n;
    while (start > 0 && std::abs(J_uc.r()[start - 1] - er) <= tol && std::abs(J_uc.p()[start - 1] - ep) <= tol) {
        --start;
    }
    double m = 0.0;
    for (std::size_t i = start; i < n; ++i) m += v.r()[i] * v.r()[i] + v.p()[i] * v.p()[i];
    return std::sqrt(m);
}

}  // namespace

Projection project_Pc(const LatticeField& v, const SolitonTangents& t) {
    const NeutralPairing np = neutral_pairing(t);
    const double b1 = inner(v, np.J_ud);
    const double b2 = inner(v, np.J_uc);
    const double th = t.theta;
    Projection out{LatticeField(v.grid()), plateau_mass(v, np.J_uc) > 1e-8};
    out.value.axpy(th * b1, t.uc);
    out.value.axpy(-th * b2 + th * th * np.X * b1, t.ud);
    return out;
}

Projection project_Qc(const LatticeField& v, const SolitonTangents& t) {
    Projection p = project_Pc(v, t);
    p.value = v - p.value;
    return p;
}

ModulationRates modulation_rates(const ModulationState& state, const LatticeField& v, const LatticeField& v1,
                                 const PotentialModel& V) {
    const SolitonModes& m = state.modes;
    const double c = state.c;
    const double D = m.dHdc;
    const LatticeField v2 = v - v1;
    const std::size_t n = v.size();

    // N1 = J w1, N2 = J w2 with p-components cancelling identically.
    LatticeField w1(v.grid()), w2(v.grid());
    for (std::size_t i = 0; i < n; ++i) {
        const double rc = m.u.r()[i];
        const double vr = v.r()[i];
        const double nl = V.d1(rc + vr) - V.d1(rc) - V.d2(rc) * vr;
        w1.r()[i] = nl;
        w2.r()[i] = nl - V.d1(v1.r()[i]) + V.d2(rc) * v1.r()[i];
    }
    const LatticeField N1 = apply_J(w1);
    const LatticeField N2 = apply_J(w2);

    const LatticeField J_ud = apply_J_inverse(m.ud).value;
    const LatticeField J_uc = apply_J_inverse(m.uc).value;
    const LatticeField J_udd = apply_J_inverse(m.udd).value;
    const LatticeField J_ucd = apply_J_inverse(m.ucd).value;
    const LatticeField J_ucc = apply_J_inverse(m.ucc).value;
    const double X = inner(m.uc, J_uc);

    // Unknowns (cdot, s) with s = (xdot - c) / c.
    const double a11 = D - inner(v, J_ucd);
    const double a12 = -inner(v, J_udd);
    const double a21 = inner(v2, J_ucc) - X;
    const double a22 = D + inner(v2, J_ucd) - inner(v2, J_ud) / c;
    const double b1 = inner(N1, J_ud);
    const double b2 = -inner(N2, J_uc) + inner(v2, J_ud) / c;

    const double det = a11 * a22 - a12 * a21;
    const double det0 = D * D;
    if (std::abs(det - det0) >= 0.1 * std::abs(det0)) throw Error("modulation system degenerate");
    const double cdot = (b1 * a22 - a12 * b2) / det;
    const double s = (a11 * b2 - a21 * b1) / det;
    return {cdot, c * s};
}

double energy_pin(const LatticeField& v, double c, double c0, double v0_norm) {
    const double den = std::abs(c - c0) + v0_norm;
    if (den < 1e-14) return 0.0;
    const double nv = l2_norm(v);
    return nv * nv / den;
}

ModulationTrack split(const Trajectory& u_traj, const Trajectory& v1_traj, double c_init, double gamma_init,
                      const SolitonFamily& family, const SplitOptions& opt) {
    if (u_traj.size() != v1_traj.size() || u_traj.size() == 0) throw Error("trajectories must share samples");
    ModulationTrack track;
    track.c0 = c_init;
    track.v0_norm = l2_norm(v1_traj.states.front());
    track.a = opt.a;
    const PotentialModel& V = family.potential();

    double c = c_init;
    double x = c_init * gamma_init;
    double xdot = c_init;
    for (std::size_t k = 0; k < u_traj.size(); ++k) {
        const double t = u_traj.times[k];
        if (std::abs(v1_traj.times[k] - t) > 1e-12 * std::max(1.0, t)) throw Error("trajectories must share times");
        if (k > 0) x += xdot * (t - u_traj.times[k - 1]);
        const LatticeField& u = u_traj.states[k];
        const LatticeField& v1 = v1_traj.states[k];
        const LatticeField ut = u - v1;
        try {
            ModulationState st;
            try {
                st = solve_constraints(u, ut, c, x / c, family, opt.constraints);
            } catch (const Error&) {
                if (!opt.tolerate_failures) throw;
                // Re-acquire by restarting Newton from nearby phases.
                bool found = false;
                for (int j = 1; j <= 16 && !found; ++j) {
                    const double shift = 0.25 * ((j + 1) / 2) * (j % 2 ? 1.0 : -1.0);
                    try {
                        st = solve_constraints(u, ut, c, (x + shift) / c, family, opt.constraints);
                        found = true;
                    } catch (const Error&) {
                    }
                }
                if (!found) throw;
            }
            SplitState fs{u - st.modes.u, v1, {}};
            fs.v2 = fs.v - v1;
            const ModulationRates rates = modulation_rates(st, fs.v, v1, V);

            TrackSample s;
            s.t = t;
            s.c = st.c;
            s.gamma = st.gamma;
            s.x = st.x;
            s.cdot = rates.cdot;
            s.xdot = st.c + rates.xdot_minus_c;
            s.F1 = st.F1;
            s.F2 = st.F2;
            s.iterations = st.iterations;
            s.norm_v_l2 = l2_norm(fs.v);
            s.norm_v1_W = weighted_norm(v1, WeightSpec::fixed_center(opt.a, st.x, family.kappa(st.c)), NormKind::W, t);
            s.norm_v2_X = weighted_norm(fs.v2, WeightSpec::fixed_center(opt.a, st.x), NormKind::X, t);
            s.energy_pin = energy_pin(fs.v, st.c, c_init, track.v0_norm);
            track.samples.push_back(s);
            if (opt.keep_fields) track.fields.push_back(std::move(fs));
            c = st.c;
            x = st.x;
            xdot = s.xdot;
        } catch (const Error& e) {
            if (!opt.tolerate_failures) {
                throw Error("split failed at sample " + std::to_string(k) + " (t = " + std::to_string(t) +
                            "): " + e.what());
            }
            const double nan = std::nan("");
            TrackSample s{t, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, 0, false};
            track.samples.push_back(s);
            if (opt.keep_fields) track.fields.push_back({});
        }
    }
    return track;
}

void write_track_csv(std::ostream& os, const ModulationTrack& track) {
    os << "t,c,gamma,x,xdot,cdot,F1,F2,norm_v_l2,norm_v1_W,norm_v2_X,energy_pin\n";
    os.precision(17);
    for (const auto& s : track.samples) {
        os << s.t << ',' << s.c << ',' << s.gamma << ',' << s.x << ',' << s.xdot << ',' << s.cdot << ',' << s.F1 << ','
           << s.F2 << ',' << s.norm_v_l2 << ',' << s.norm_v1_W << ',' << s.norm_v2_X << ',' << s.energy_pin << '\n';
    }
}

}  // namespace todalab
