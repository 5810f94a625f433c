#pragma once

// Decomposition u = u_c(gamma) + v with the two orthogonality constraints,
// the spectral projection onto the neutral modes, and the modulation rates.

#include <iosfwd>
#include <vector>

#include "todalab/dynamics.hpp"
#include "todalab/lattice.hpp"
#include "todalab/solitons.hpp"

namespace todalab {

struct ModulationState {
    double c = 0.0;
    double gamma = 0.0;
    double x = 0.0;  // c * gamma
    SolitonModes modes;
    double F1 = 0.0;
    double F2 = 0.0;
    /// Jacobian determinant of (F1, F2) in (c, gamma) at the returned point.
    double det = 0.0;
    int iterations = 0;

    [[nodiscard]] SolitonTangents tangents() const { return modes.tangents(); }
};

struct ConstraintOptions {
    int max_iterations = 25;
    double max_step = 0.5;
    double tolerance = 1e-13;  // relative to dH/dc; a stall below 1e-8 is accepted
};

/// Newton iteration on
///   F1 = <u - u_c(gamma), J^{-1} ud_c(gamma)>,
///   F2 = <(u - v1) - u_c(gamma), J^{-1} d_c u_c(gamma)>.
/// Throws "left tubular neighborhood" on divergence.
ModulationState solve_constraints(const LatticeField& u, const LatticeField& u_minus_v1, double c_init,
                                  double gamma_init, const SolitonFamily& family,
                                  const ConstraintOptions& opt = {});

/// J^{-1} applied to each neutral direction, with the self-pairing
/// X = <d_c u, J^{-1} d_c u> that the one-sided inverse leaves nonzero.
struct NeutralPairing {
    LatticeField J_ud;
    LatticeField J_uc;
    double dHdc = 0.0;
    double X = 0.0;
};
NeutralPairing neutral_pairing(const SolitonTangents& t);

struct Projection {
    LatticeField value;
    /// Set when v carries more than 1e-8 of l2 mass where J^{-1} d_c u has
    /// reached its one-sided plateau, so the pairing depends on the window.
    bool warning = false;
};

/// Oblique projection onto span{ud, uc} along the J^{-1}-annihilator of that span.
/// With beta1 = <v, J^{-1} ud>, beta2 = <v, J^{-1} uc> and theta = 1/(dH/dc):
///   P v = theta beta1 uc - theta beta2 ud + theta^2 X beta1 ud.
/// The last term vanishes when X = 0.
Projection project_Pc(const LatticeField& v, const SolitonTangents& t);
Projection project_Qc(const LatticeField& v, const SolitonTangents& t);

struct ModulationRates {
    double cdot = 0.0;
    double xdot_minus_c = 0.0;
};

/// Solves the 2x2 modulation system at a constrained state. Throws
/// "modulation system degenerate" when the v-dependent corrections move the
/// determinant by 10% or more.
ModulationRates modulation_rates(const ModulationState& state, const LatticeField& v, const LatticeField& v1,
                                 const PotentialModel& V);

/// ||v||^2 / (|c - c0| + ||v0||); 0 when the denominator is below 1e-14.
double energy_pin(const LatticeField& v, double c, double c0, double v0_norm);

struct SplitState {
    LatticeField v;
    LatticeField v1;
    LatticeField v2;
};

struct TrackSample {
    double t = 0.0;
    double c = 0.0;
    double gamma = 0.0;
    double x = 0.0;
    double xdot = 0.0;
    double cdot = 0.0;
    double F1 = 0.0;
    double F2 = 0.0;
    double norm_v_l2 = 0.0;
    double norm_v1_W = 0.0;
    double norm_v2_X = 0.0;
    double energy_pin = 0.0;
    int iterations = 0;
    bool valid = true;
};

struct ModulationTrack {
    std::vector<TrackSample> samples;
    std::vector<SplitState> fields;
    double c0 = 0.0;
    double v0_norm = 0.0;
    double a = 0.0;  // X-norm exponent used for norm_v2_X

    [[nodiscard]] std::size_t size() const { return samples.size(); }
};

struct SplitOptions {
    double a = 0.1;           // X(t) weight exponent
    bool keep_fields = true;  // retain v, v1, v2 per sample
    /// Record failed samples as NaN rows and re-acquire the wave afterwards
    /// instead of throwing (used while a second wave overlaps the tracked one).
    bool tolerate_failures = false;
    ConstraintOptions constraints;
};

/// Runs the constraint solve along a trajectory of u with the companion
/// trajectory of v1 (same times and grid), warm-starting each sample.
ModulationTrack split(const Trajectory& u_traj, const Trajectory& v1_traj, double c_init, double gamma_init,
                      const SolitonFamily& family, const SplitOptions& opt = {});

void write_track_csv(std::ostream& os, const ModulationTrack& track);

}  // namespace todalab
