#pragma once

// Virial functionals, tail norms and decay fits measured along runs.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "todalab/dynamics.hpp"
#include "todalab/lattice.hpp"
#include "todalab/modulation.hpp"
#include "todalab/solitons.hpp"

namespace todalab {

/// Weight line x~(t) = x0 + slope * t.
struct VirialSpec {
    double a = 0.1;
    double x0 = 0.0;
    double slope = 1.2;

    [[nodiscard]] double center(double t) const { return x0 + slope * t; }
    /// psi_a = 1 + tanh a(x - x~(t)), in (0, 2).
    [[nodiscard]] double psi(double t, double x) const;
    /// psi~_a^2 = a sech^2 a(x - x~(t)) = d/dx psi_a.
    [[nodiscard]] double psi_tilde_sq(double t, double x) const;
    void validate(double sound_speed) const;
};

/// sum_n psi_a(t, n) (p^2 / 2 + V(r))
double virial_energy(const LatticeField& v, const PotentialModel& V, const VirialSpec& spec, double t);
/// sum_n psi~_a(t, n)^2 (p^2 + r^2)
double virial_dissipation(const LatticeField& v, const VirialSpec& spec, double t);

struct MonotonicityReport {
    std::vector<double> times, M, D, integrated_D;
    bool monotone = true;        // M(t_{k+1}) <= M(t_k) + step_tol * M(0)
    bool bound_holds = true;     // fitted delta > 0 (or unconstrained)
    std::optional<double> delta; // largest constant in M(t) + delta int_0^t D <= M(0)(1 + tol); empty if unconstrained
    std::optional<double> first_violation_t;
    double max_increase = 0.0;   // largest per-sample increase relative to M(0)

    [[nodiscard]] bool pass() const { return monotone && bound_holds; }
};

MonotonicityReport monotonicity_check(const Trajectory& v1_traj, const PotentialModel& V, const VirialSpec& spec,
                                      double step_tol = 1e-10, double bound_tol = 1e-10);

/// l2 norm over sites n >= sigma t of u, minus the reference soliton
/// family(c, x) when given. Throws when sigma t lies beyond the window.
struct TailReference {
    const SolitonFamily* family;
    double c;
    double x;
};
double tail_norm(const LatticeField& u, double sigma, double t, std::optional<TailReference> ref = std::nullopt);

struct DecayFit {
    double rate = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    std::size_t samples = 0;
};

/// Least squares on (t, log value) over samples with t_lo <= t <= t_hi; rate = -slope.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& value, double t_lo, double t_hi);

/// Slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Trapezoid integral of ||v2||_X^2 divided by ||v0||^2 (0 when v0 = 0).
double v2_integral_bound(const ModulationTrack& track);

/// min over y of ||u - family(c, y)||_{l2}, searched within y_guess +/- half_width.
struct PhaseFit {
    double error;
    double phase;
};
PhaseFit phase_optimized_error(const LatticeField& u, const SolitonFamily& family, double c, double y_guess,
                               double half_width = 0.5);

/// Writes named columns of equal length.
void write_series_csv(std::ostream& os, const std::vector<std::string>& names,
                      const std::vector<const std::vector<double>*>& columns);

}  // namespace todalab
