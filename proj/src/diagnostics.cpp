#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <boost/math/tools/minima.hpp>

#include "todalab/diagnostics.hpp"
#include "todalab/jet.hpp"

namespace todalab {

double VirialSpec::psi(double t, double x) const { return 1.0 + std::tanh(a * (x - center(t))); }

double VirialSpec::psi_tilde_sq(double t, double x) const { return a * sech2(a * (x - center(t))); }

void VirialSpec::validate(double sound_speed) const {
    if (!(a > 0.0)) throw Error("virial exponent a must be positive");
    if (!(slope > sound_speed)) throw Error("virial line must move faster than the sound speed");
}

double virial_energy(const LatticeField& v, const PotentialModel& V, const VirialSpec& spec, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double h = 0.5 * v.p()[i] * v.p()[i] + V.value(v.r()[i]);
        if (h != 0.0) s += spec.psi(t, static_cast<double>(v.grid().site(i))) * h;
    }
    return s;
}

double virial_dissipation(const LatticeField& v, const VirialSpec& spec, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double m = v.p()[i] * v.p()[i] + v.r()[i] * v.r()[i];
        if (m != 0.0) s += spec.psi_tilde_sq(t, static_cast<double>(v.grid().site(i))) * m;
    }
    return s;
}

MonotonicityReport monotonicity_check(const Trajectory& v1_traj, const PotentialModel& V, const VirialSpec& spec,
                                      double step_tol, double bound_tol) {
    MonotonicityReport rep;
    const std::size_t n = v1_traj.size();
    if (n == 0) return rep;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = v1_traj.times[k];
        rep.times.push_back(t);
        rep.M.push_back(virial_energy(v1_traj.states[k], V, spec, t));
        rep.D.push_back(virial_dissipation(v1_traj.states[k], spec, t));
        double I = 0.0;
        if (k > 0) I = rep.integrated_D.back() + 0.5 * (rep.D[k] + rep.D[k - 1]) * (t - rep.times[k - 1]);
        rep.integrated_D.push_back(I);
    }
    const double M0 = rep.M.front();
    if (M0 == 0.0 && std::all_of(rep.M.begin(), rep.M.end(), [](double m) { return m == 0.0; })) return rep;

    for (std::size_t k = 1; k < n; ++k) {
        const double inc = (rep.M[k] - rep.M[k - 1]) / std::abs(M0);
        rep.max_increase = std::max(rep.max_increase, inc);
        if (inc > step_tol && rep.monotone) {
            rep.monotone = false;
            rep.first_violation_t = rep.times[k];
        }
    }

    double delta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < n; ++k) {
        const double slack = M0 * (1.0 + bound_tol) - rep.M[k];
        if (rep.integrated_D[k] > 0.0) {
            delta = std::min(delta, slack / rep.integrated_D[k]);
        } else if (slack < 0.0) {
            delta = -std::numeric_limits<double>::infinity();
        }
        if (slack < 0.0 && !rep.first_violation_t) rep.first_violation_t = rep.times[k];
    }
    if (std::isfinite(delta)) rep.delta = delta;
    rep.bound_holds = delta > 0.0;
    return rep;
}

double tail_norm(const LatticeField& u, double sigma, double t, std::optional<TailReference> ref) {
    const double edge = sigma * t;
    const LatticeGrid& g = u.grid();
    if (edge > static_cast<double>(g.n_max)) throw Error("tail region n >= sigma t lies outside the window");
    LatticeField d = u;
    if (ref) d -= ref->family->sample(g, ref->c, ref->x);
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (static_cast<double>(g.site(i)) >= edge) s += d.r()[i] * d.r()[i] + d.p()[i] * d.p()[i];
    }
    return std::sqrt(s);
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double t_lo, double t_hi) {
    if (!(t_lo < t_hi)) throw Error("decay fit window must have t_lo < t_hi");
    if (t.size() != value.size()) throw Error("decay fit series lengths differ");
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_lo || t[k] > t_hi) continue;
        if (!(value[k] > 0.0)) throw Error("decay fit needs positive values");
        xs.push_back(t[k]);
        ys.push_back(std::log(value[k]));
    }
    if (xs.size() < 10) throw Error("decay fit needs at least 10 samples in the window");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    const double slope = sxy / sxx;
    DecayFit f;
    f.rate = -slope;
    f.intercept = my - slope * mx;
    // A flat series is fitted exactly.
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.t_lo = t_lo;
    f.t_hi = t_hi;
    f.samples = xs.size();
    return f;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("log-log fit needs at least two points");
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw Error("log-log fit needs positive values");
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double lx = std::log(x[k]) - mx;
        sxx += lx * lx;
        sxy += lx * (std::log(y[k]) - my);
    }
    return sxy / sxx;
}

double v2_integral_bound(const ModulationTrack& track) {
    if (track.v0_norm == 0.0 || track.size() < 2) return 0.0;
    double s = 0.0;
    for (std::size_t k = 1; k < track.size(); ++k) {
        const auto& a = track.samples[k - 1];
        const auto& b = track.samples[k];
        s += 0.5 * (a.norm_v2_X * a.norm_v2_X + b.norm_v2_X * b.norm_v2_X) * (b.t - a.t);
    }
    return s / (track.v0_norm * track.v0_norm);
}

PhaseFit phase_optimized_error(const LatticeField& u, const SolitonFamily& family, double c, double y_guess,
                               double half_width) {
    auto f = [&](double y) { return l2_norm(u - family.sample(u.grid(), c, y)); };
    const auto [y, err] = boost::math::tools::brent_find_minima(f, y_guess - half_width, y_guess + half_width, 52);
    return {err, y};
}

void write_series_csv(std::ostream& os, const std::vector<std::string>& names,
                      const std::vector<const std::vector<double>*>& columns) {
    if (names.size() != columns.size() || names.empty()) throw Error("series names and columns differ");
    const std::size_t n = columns.front()->size();
    for (const auto* c : columns) {
        if (c->size() != n) throw Error("series columns differ in length");
    }
    for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < columns.size(); ++j) os << (j ? "," : "") << (*columns[j])[k];
        os << '\n';
    }
}

}  // namespace todalab
