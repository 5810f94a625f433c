#pragma once

// Time integration of the lattice and of its linearization about a moving soliton.

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "todalab/lattice.hpp"
#include "todalab/solitons.hpp"

namespace todalab {

enum class Scheme { StormerVerlet, RK4 };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct IntegratorConfig {
    double dt = 0.01;
    Scheme scheme = Scheme::StormerVerlet;
    double t_end = 100.0;
    int sample_every = 10;

    /// Throws unless 0 < dt <= 0.1, t_end >= 0 and sample_every >= 1.
    void validate() const;
    [[nodiscard]] long steps() const;
};

/// Samples of u(t); equal lengths, times strictly increasing. For linearized
/// runs the energy column holds the quadratic form (1/2) <H''(u_c) v, v>.
struct Trajectory {
    std::vector<double> times;
    std::vector<LatticeField> states;
    std::vector<double> energies;

    [[nodiscard]] std::size_t size() const { return times.size(); }
};

/// Raised when the state stops being finite; carries the time of blow-up.
class BlowUp : public Error {
public:
    BlowUp(double t);
    double time;
};

/// du/dt = J H'(u), zero padding outside the window.
Trajectory evolve(const LatticeField& u0, const PotentialModel& V, const IntegratorConfig& cfg);

/// dv/dt = J H''(u_c) v along the soliton of speed c0 centered at x0 + c0 t; always RK4.
Trajectory evolve_linearized(const LatticeField& v0, const SolitonFamily& family, double c0, double x0,
                             const IntegratorConfig& cfg);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
nlohmann::json trajectory_meta(const IntegratorConfig& cfg, const LatticeGrid& grid, const PotentialModel& V);

}  // namespace todalab
