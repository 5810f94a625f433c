#pragma once

// Solitary waves: closed-form Toda 1-solitons and spectrally computed FPU
// solitary waves, their tangent fields and energy derivatives, and the
// SolitonFamily abstraction the modulation machinery is written against.

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "todalab/lattice.hpp"

namespace todalab {

/// Unique positive root of sinh(k)/k = c, c > 1.
double solve_kappa(double c);

/// kappa(c) with its first and second derivatives in c.
struct KappaDerivatives {
    double kappa, d1, d2;
};
KappaDerivatives kappa_derivatives(double c);

struct TodaSoliton {
    double c = 1.5;
    double kappa = 0.0;

    static TodaSoliton with_speed(double c);
};

struct TodaProfilePoint {
    double q, r, p;
};

TodaProfilePoint toda_profile(const TodaSoliton& s, double x);

/// r(n) = r~(n - x0), p(n) = p~(n - x0). The center must sit 25/kappa sites inside.
LatticeField sample_toda(const TodaSoliton& s, const LatticeGrid& grid, double x0);

struct SolitonTangents {
    LatticeField ud;  // time derivative of u_c, equal to -c d/dx u~_c
    LatticeField uc;  // d/dc u~_c at fixed phase
    double dHdc = 0.0;
    double theta = 0.0;  // 1 / dHdc
};

SolitonTangents toda_tangents(const TodaSoliton& s, const LatticeGrid& grid, double x0);

double fpu_sound_speed(const PotentialModel& V);

struct FpuSolveOptions {
    int max_iterations = 2000;
    double tolerance = 1e-12;   // Petviashvili stopping threshold on the sup-norm update
    int newton_steps = 4;       // bordered Newton polish, used only if the residual target is missed
    double residual_target = 1e-10;
};

/// Even, single-signed FPU solitary-wave profile on a periodic collocation grid
/// x_j = -L/2 + j h, h = 1/points_per_site.
struct FpuSoliton {
    PotentialModel V;
    double c = 0.0;
    double c_s = 1.0;
    double L = 0.0;
    int points_per_site = 1;
    std::vector<double> x;
    std::vector<double> r;
    std::vector<double> p;
    double residual = 0.0;  // sup-norm defect of c^2 r'' - (V'(r)(x+1) - 2V'(r)(x) + V'(r)(x-1))
    int iterations = 0;

    [[nodiscard]] std::size_t points() const { return r.size(); }
    [[nodiscard]] double amplitude() const;
    [[nodiscard]] double centroid() const;
};

FpuSoliton solve_fpu_profile(const PotentialModel& V, double c, double L, int n_colloc,
                             const FpuSolveOptions& opt = {});

/// Long-wave sech^2 profile used as the Petviashvili seed.
double fpu_kdv_amplitude(const PotentialModel& V, double c);

/// Defect of the advance-delay equation at the midpoints between collocation points.
double fpu_midpoint_defect(const FpuSoliton& s);

LatticeField sample_fpu(const FpuSoliton& s, const LatticeGrid& grid, double x0);
SolitonTangents fpu_tangents(const FpuSoliton& s, const LatticeGrid& grid, double x0);

void write_profile_csv(std::ostream& os, const std::vector<double>& x, const std::vector<double>& r,
                       const std::vector<double>& p);
nlohmann::json profile_sidecar(const FpuSoliton& s);
nlohmann::json profile_sidecar(const TodaSoliton& s, double L, std::size_t n);

// ---------------------------------------------------------------------------

/// Sampled profile u~_c(n - x) with its x- and c-derivatives up to order two.
struct ProfileJet {
    LatticeField value, dx, dxx, dc, dxc, dcc;
};

/// Everything the modulation equations need at a point (c, x) of the family.
struct SolitonModes {
    double c = 0.0, x = 0.0;
    LatticeField u;    // u_c(gamma)
    LatticeField ud;   // u_c dot
    LatticeField uc;   // d_c u_c
    LatticeField udd;  // u_c double dot = c^2 d_x^2 u~
    LatticeField ucd;  // d_c u_c dot
    LatticeField ucc;  // d_c^2 u_c
    double energy = 0.0;
    double dHdc = 0.0;

    [[nodiscard]] SolitonTangents tangents() const;
};

class SolitonFamily {
public:
    virtual ~SolitonFamily() = default;

    [[nodiscard]] virtual ProfileJet sample_jet(const LatticeGrid& grid, double c, double x) const = 0;
    [[nodiscard]] virtual const PotentialModel& potential() const = 0;
    [[nodiscard]] virtual double sound_speed() const = 0;
    /// Exponent kappa such that the profile decays like e^{-2 kappa |x|}.
    [[nodiscard]] virtual double kappa(double c) const = 0;
    /// Speeds for which the family can be evaluated.
    [[nodiscard]] virtual double c_min() const = 0;
    [[nodiscard]] virtual double c_max() const = 0;

    [[nodiscard]] LatticeField sample(const LatticeGrid& grid, double c, double x) const;
    [[nodiscard]] SolitonModes modes(const LatticeGrid& grid, double c, double x) const;
};

class TodaFamily final : public SolitonFamily {
public:
    [[nodiscard]] ProfileJet sample_jet(const LatticeGrid& grid, double c, double x) const override;
    [[nodiscard]] const PotentialModel& potential() const override { return V_; }
    [[nodiscard]] double sound_speed() const override { return 1.0; }
    [[nodiscard]] double kappa(double c) const override { return solve_kappa(c); }
    [[nodiscard]] double c_min() const override { return 1.0; }
    [[nodiscard]] double c_max() const override { return 1e3; }

private:
    PotentialModel V_ = PotentialModel::toda();
};

/// FPU solitary waves on [c_lo, c_hi], interpolated in c through Chebyshev nodes.
class FpuFamily final : public SolitonFamily {
public:
    FpuFamily(PotentialModel V, double c_lo, double c_hi, double L, int points_per_site,
              int nodes = 9);

    [[nodiscard]] ProfileJet sample_jet(const LatticeGrid& grid, double c, double x) const override;
    [[nodiscard]] const PotentialModel& potential() const override { return V_; }
    [[nodiscard]] double sound_speed() const override { return c_s_; }
    [[nodiscard]] double kappa(double c) const override;
    [[nodiscard]] double c_min() const override { return c_lo_; }
    [[nodiscard]] double c_max() const override { return c_hi_; }
    [[nodiscard]] const std::vector<FpuSoliton>& node_profiles() const { return profiles_; }

private:
    PotentialModel V_;
    double c_s_, c_lo_, c_hi_, L_;
    int pps_;
    std::vector<FpuSoliton> profiles_;
    std::vector<double> nodes_;
};

}  // namespace todalab
