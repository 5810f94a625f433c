#include <cmath>
#include <functional>
#include <ostream>

#include "todalab/dynamics.hpp"

namespace todalab {

std::string to_string(Scheme s) { return s == Scheme::StormerVerlet ? "stormer_verlet" : "rk4"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "stormer_verlet" || s == "verlet") return Scheme::StormerVerlet;
    if (s == "rk4") return Scheme::RK4;
    throw Error("unknown integration scheme '" + s + "'");
}

void IntegratorConfig::validate() const {
    if (!(dt > 0.0) || dt > 0.1) throw Error("time step must satisfy 0 < dt <= 0.1");
    if (!(t_end >= 0.0)) throw Error("t_end must be nonnegative");
    if (sample_every < 1) throw Error("sample_every must be at least 1");
}

long IntegratorConfig::steps() const { return std::lround(t_end / dt); }

BlowUp::BlowUp(double t) : Error("non-finite state at t = " + std::to_string(t)), time(t) {}

namespace {

// Neighbour access honouring the boundary: zero padding or wrap-around.
struct Stencil {
    std::size_t n;
    bool periodic;

    [[nodiscard]] double left(const std::vector<double>& v, std::size_t i) const {
        if (i > 0) return v[i - 1];
        return periodic ? v[n - 1] : 0.0;
    }
    [[nodiscard]] double right(const std::vector<double>& v, std::size_t i) const {
        if (i + 1 < n) return v[i + 1];
        return periodic ? v[0] : 0.0;
    }
};

// dr/dt = p(n+1) - p(n)
void drift_rate(const Stencil& s, const std::vector<double>& p, std::vector<double>& out) {
    for (std::size_t i = 0; i < s.n; ++i) out[i] = s.right(p, i) - p[i];
}

// dp/dt = F(n) - F(n-1) with F = V'(r) or a(n) r(n)
void kick_rate(const Stencil& s, const std::vector<double>& F, std::vector<double>& out) {
    for (std::size_t i = 0; i < s.n; ++i) out[i] = F[i] - s.left(F, i);
}

class Sampler {
public:
    Sampler(const IntegratorConfig& cfg, Trajectory& traj) : cfg_(cfg), traj_(traj) {}

    void record(long step, const LatticeField& u, double energy) {
        const double t = static_cast<double>(step) * cfg_.dt;
        if (!u.all_finite() || !std::isfinite(energy)) throw BlowUp(t);
        traj_.times.push_back(t);
        traj_.states.push_back(u);
        traj_.energies.push_back(energy);
    }
    [[nodiscard]] bool due(long step) const { return step % cfg_.sample_every == 0 || step == cfg_.steps(); }

private:
    const IntegratorConfig& cfg_;
    Trajectory& traj_;
};

using RateFn = std::function<void(double t, const LatticeField& u, LatticeField& du)>;

void rk4_step(const RateFn& f, double t, double dt, LatticeField& u, LatticeField (&k)[4], LatticeField& tmp) {
    f(t, u, k[0]);
    tmp = u;
    tmp.axpy(0.5 * dt, k[0]);
    f(t + 0.5 * dt, tmp, k[1]);
    tmp = u;
    tmp.axpy(0.5 * dt, k[1]);
    f(t + 0.5 * dt, tmp, k[2]);
    tmp = u;
    tmp.axpy(dt, k[2]);
    f(t + dt, tmp, k[3]);
    u.axpy(dt / 6.0, k[0]);
    u.axpy(dt / 3.0, k[1]);
    u.axpy(dt / 3.0, k[2]);
    u.axpy(dt / 6.0, k[3]);
}

Trajectory integrate_rk4(const LatticeField& u0, const RateFn& f, const IntegratorConfig& cfg,
                         const std::function<double(double, const LatticeField&)>& energy) {
    Trajectory traj;
    Sampler sampler(cfg, traj);
    LatticeField u = u0;
    LatticeField k[4] = {LatticeField(u0.grid()), LatticeField(u0.grid()), LatticeField(u0.grid()),
                         LatticeField(u0.grid())};
    LatticeField tmp(u0.grid());
    const long steps = cfg.steps();
    sampler.record(0, u, energy(0.0, u));
    for (long s = 1; s <= steps; ++s) {
        const double t = static_cast<double>(s - 1) * cfg.dt;
        rk4_step(f, t, cfg.dt, u, k, tmp);
        if (sampler.due(s)) sampler.record(s, u, energy(static_cast<double>(s) * cfg.dt, u));
    }
    return traj;
}

}  // namespace

Trajectory evolve(const LatticeField& u0, const PotentialModel& V, const IntegratorConfig& cfg) {
    cfg.validate();
    if (!u0.all_finite()) throw BlowUp(0.0);
    const Stencil st{u0.size(), u0.grid().boundary == Boundary::Periodic};
    std::vector<double> F(u0.size());
    auto energy = [&](double, const LatticeField& u) { return hamiltonian(u, V); };

    if (cfg.scheme == Scheme::RK4) {
        RateFn f = [&](double, const LatticeField& u, LatticeField& du) {
            for (std::size_t i = 0; i < st.n; ++i) F[i] = V.d1(u.r()[i]);
            drift_rate(st, u.p(), du.r());
            kick_rate(st, F, du.p());
        };
        return integrate_rk4(u0, f, cfg, energy);
    }

    // Kick-drift-kick on q'' = V'(r(n)) - V'(r(n-1)); the drift of q is
    // carried out on r = q(n+1) - q(n) directly, which is the same update.
    Trajectory traj;
    Sampler sampler(cfg, traj);
    LatticeField u = u0;
    std::vector<double>& r = u.r();
    std::vector<double>& p = u.p();
    std::vector<double> rate(u.size());
    const double h = cfg.dt;
    const long steps = cfg.steps();
    sampler.record(0, u, hamiltonian(u, V));
    for (std::size_t i = 0; i < st.n; ++i) F[i] = V.d1(r[i]);
    for (long s = 1; s <= steps; ++s) {
        kick_rate(st, F, rate);
        for (std::size_t i = 0; i < st.n; ++i) p[i] += 0.5 * h * rate[i];
        drift_rate(st, p, rate);
        for (std::size_t i = 0; i < st.n; ++i) r[i] += h * rate[i];
        for (std::size_t i = 0; i < st.n; ++i) F[i] = V.d1(r[i]);
        kick_rate(st, F, rate);
        for (std::size_t i = 0; i < st.n; ++i) p[i] += 0.5 * h * rate[i];
        if (sampler.due(s)) sampler.record(s, u, hamiltonian(u, V));
    }
    return traj;
}

Trajectory evolve_linearized(const LatticeField& v0, const SolitonFamily& family, double c0, double x0,
                             const IntegratorConfig& cfg) {
    cfg.validate();
    if (!v0.all_finite()) throw BlowUp(0.0);
    const PotentialModel& V = family.potential();
    const LatticeGrid& grid = v0.grid();
    const Stencil st{v0.size(), grid.boundary == Boundary::Periodic};

    std::vector<double> a(v0.size()), F(v0.size());
    double a_time = std::nan("");
    const auto* toda = dynamic_cast<const TodaFamily*>(&family);
    const TodaSoliton sol = toda ? TodaSoliton::with_speed(c0) : TodaSoliton{};
    auto coefficient = [&](double t) {
        if (t == a_time) return;
        const double xc = x0 + c0 * t;
        if (toda) {
            for (std::size_t i = 0; i < st.n; ++i) {
                a[i] = V.d2(toda_profile(sol, static_cast<double>(grid.site(i)) - xc).r);
            }
        } else {
            const LatticeField uc = family.sample(grid, c0, xc);
            for (std::size_t i = 0; i < st.n; ++i) a[i] = V.d2(uc.r()[i]);
        }
        a_time = t;
    };

    RateFn f = [&](double t, const LatticeField& v, LatticeField& dv) {
        coefficient(t);
        for (std::size_t i = 0; i < st.n; ++i) F[i] = a[i] * v.r()[i];
        drift_rate(st, v.p(), dv.r());
        kick_rate(st, F, dv.p());
    };
    auto quadratic = [&](double t, const LatticeField& v) {
        coefficient(t);
        double e = 0.0;
        for (std::size_t i = 0; i < st.n; ++i) e += a[i] * v.r()[i] * v.r()[i] + v.p()[i] * v.p()[i];
        return 0.5 * e;
    };
    return integrate_rk4(v0, f, cfg, quadratic);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,energy\n";
    os.precision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) os << traj.times[k] << ',' << traj.energies[k] << '\n';
}

nlohmann::json trajectory_meta(const IntegratorConfig& cfg, const LatticeGrid& grid, const PotentialModel& V) {
    return {{"scheme", to_string(cfg.scheme)},
            {"dt", cfg.dt},
            {"t_end", cfg.t_end},
            {"sample_every", cfg.sample_every},
            {"grid", {{"n_min", grid.n_min}, {"n_max", grid.n_max},
                      {"boundary", grid.boundary == Boundary::Periodic ? "periodic" : "zero_padding"}}},
            {"potential", V.describe()}};
}

}  // namespace todalab
